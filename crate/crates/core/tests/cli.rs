use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mealbench::demo::write_demo;

fn mealbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mealbench")).args(args).output().unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn all_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let layout = write_demo(dir.path(), 42, 200, 10).unwrap();
    let first = mealbench(&["all", "--config", path_arg(&layout.config)]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let out = dir.path().join("out");
    let a = snapshot(&out);
    fs::remove_dir_all(&out).unwrap();
    let second = mealbench(&["all", "--config", path_arg(&layout.config)]);
    assert!(second.status.success());
    let b = snapshot(&out);
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in &a {
        assert!(v == &b[k], "{} differs between runs", k.display());
    }
    assert!(a.keys().any(|k| k.ends_with("report/table2.md")));
    assert!(a.keys().any(|k| k.ends_with("metrics.csv")));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn ingest_missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = mealbench(&["ingest", "--food", path_arg(&missing), "--nutrient", path_arg(&missing), "--out", path_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn duplicate_food_ids_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let layout = write_demo(dir.path(), 42, 200, 10).unwrap();
    let text = fs::read_to_string(&layout.food_csv).unwrap();
    let dup = text.lines().nth(1).unwrap().to_owned();
    fs::write(&layout.food_csv, format!("{text}{dup}\n")).unwrap();
    let out = mealbench(&["ingest", "--config", path_arg(&layout.config)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn evaluate_without_run_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = mealbench(&["evaluate", "--out", path_arg(dir.path()), "--run-id", "absent"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_manifest_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let layout = write_demo(dir.path(), 42, 200, 10).unwrap();
    assert!(mealbench(&["ingest", "--config", path_arg(&layout.config)]).status.success());
    let manifest = dir.path().join("absent.json");
    let out = mealbench(&["run", "--config", path_arg(&layout.config), "--manifest", path_arg(&manifest)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}

#[test]
fn rag_adds_reference_block_to_every_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let layout = write_demo(dir.path(), 7, 200, 10).unwrap();
    assert!(mealbench(&["ingest", "--config", path_arg(&layout.config)]).status.success());
    let out = mealbench(&["run", "--config", path_arg(&layout.config), "--rag", "--run-id", "rag"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let prompts = dir.path().join("out/runs/rag/prompts");
    let files: Vec<_> = fs::read_dir(&prompts).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 10);
    for f in files {
        assert!(fs::read_to_string(&f).unwrap().contains("REFERENCE NUTRITION (USDA)"), "{}", f.display());
    }
}

#[test]
fn stages_compose() {
    let dir = tempfile::tempdir().unwrap();
    let layout = write_demo(dir.path(), 42, 200, 10).unwrap();
    let cfg = path_arg(&layout.config);
    for stage in ["ingest", "profiles", "run", "evaluate", "report"] {
        let out = mealbench(&[stage, "--config", cfg, "--run-id", "staged"]);
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let table2 = fs::read_to_string(dir.path().join("out/runs/staged/report/table2.md")).unwrap();
    assert!(table2.contains("deepseek-v3"));
}
