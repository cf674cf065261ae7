use std::collections::BTreeMap;
use std::path::PathBuf;

use mealbench::parser::{grade_completeness, parse_plans, CompletenessFlags};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/transcripts")
}

fn labels() -> BTreeMap<String, CompletenessFlags> {
    let text = std::fs::read_to_string(corpus_dir().join("labels.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn grade(name: &str) -> CompletenessFlags {
    let raw = std::fs::read_to_string(corpus_dir().join(name)).unwrap();
    let (plans, warnings) = parse_plans::<f64>(&raw);
    grade_completeness(&plans, &warnings, &raw)
}

#[test]
fn corpus_has_required_cases() {
    let labels = labels();
    assert!(labels.len() >= 12);
    assert!(labels.values().any(|f| f.plans_found == 3 && f.has_three_options && f.disclaimer_present));
    assert!(labels.values().any(|f| f.plans_found == 1));
    assert!(labels.values().any(|f| f.plans_found == 0));
    assert!(labels.values().any(|f| f.plans_found > 0 && !f.macros_present));
    assert!(labels.values().any(|f| f.plans_found > 0 && !f.disclaimer_present));
}

#[test]
fn every_label_matches() {
    let mut mismatches = Vec::new();
    for (name, expected) in labels() {
        let got = grade(&name);
        if got != expected {
            mismatches.push(format!("{name}: expected {expected:?}, got {got:?}"));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}

#[test]
fn every_fixture_is_labeled() {
    let labels = labels();
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".txt") {
            assert!(labels.contains_key(&name), "{name} has no label");
        }
    }
}
