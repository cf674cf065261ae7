//! Self-contained demo data: a synthetic FDC export, replayable transcripts
//! for four stub models, and a config tying them together.
//!
//! Transcripts are built from the same profiles the pipeline will generate
//! for the chosen seed, so a demo run produces meaningful metrics offline.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::catalog::{load_catalog, NutrientId};
use crate::nutrients::NutrientVector;
use crate::parser::{emit_plans, Meal, MealItem, MealKind, MealPlan, PortionSpec, ReportedTotals};
use crate::profile::{generate_profiles, sample_pool, ConsumptionProfile, NutritionTargets, ProfileEntry, ProfileSettings};
use crate::{Catalog, FoodRecord};

/// The worked intake used throughout the docs and tests:
/// (description, kcal, protein g, sugar g, quantity) per 100 g serving.
pub const SAMPLE_INTAKE: [(&str, f64, f64, f64, f64); 8] = [
    ("Food_Barbequeue_Lays", 150.0, 2.0, 1.0, 1.0),
    ("Garden_Pizza", 280.0, 12.0, 4.0, 1.0),
    ("Milano_double_chocolate", 140.0, 1.5, 9.0, 1.0),
    ("baked_cheddar_ruffles", 130.0, 2.0, 0.5, 1.0),
    ("beef_angus_burger_patty", 290.0, 19.0, 0.0, 1.0),
    ("chocolate_milkshake", 250.0, 9.0, 42.5, 1.0),
    ("eggs_benedict", 386.5, 13.0, 1.6, 0.5),
    ("tortilla_chips", 140.0, 2.0, 0.5, 1.0),
];

/// Foods in the export with no energy value; the loader drops them.
pub const DROPPED_FOODS: [&str; 3] = ["Mystery broth", "Unlabeled snack mix", "Test kitchen sample"];

const BASES: [&str; 20] = [
    "Chicken breast", "Brown rice", "Oatmeal", "Greek yogurt", "Turkey sandwich", "Beef stew", "Lentil soup",
    "Caesar salad", "Salmon fillet", "Pasta primavera", "Veggie burger", "Fruit smoothie", "Pancakes",
    "Scrambled eggs", "Tofu stir fry", "Bean burrito", "Tuna salad", "Cheese omelette", "Quinoa bowl", "Banana bread",
];

const VARIANTS: [&str; 12] = [
    "", "low fat", "homestyle", "spicy", "organic", "frozen", "restaurant style", "reduced sodium", "whole grain",
    "garlic herb", "lemon pepper", "smoky barbecue",
];

/// Stub models and how each misbehaves.
#[derive(Debug, Clone, Copy)]
pub struct DemoModel {
    pub model_id: &'static str,
    /// Relative spread of the plan total around the target.
    pub target_spread: f64,
    /// Relative spread of each reported item kcal around the catalog value.
    pub item_spread: f64,
    /// Emit a single plan on even-numbered inputs.
    pub single_plan_on_even: bool,
    /// 1-based inputs left without a transcript.
    pub failed_inputs: &'static [usize],
    pub disclaimer: bool,
    /// Write item names in a shuffled word order.
    pub reorder_names: bool,
}

pub const DEMO_MODELS: [DemoModel; 4] = [
    DemoModel { model_id: "llama-3.1-8b", target_spread: 0.02, item_spread: 0.03, single_plan_on_even: false, failed_inputs: &[], disclaimer: true, reorder_names: false },
    DemoModel { model_id: "gpt-3.5-turbo", target_spread: 0.05, item_spread: 0.06, single_plan_on_even: false, failed_inputs: &[], disclaimer: true, reorder_names: true },
    DemoModel { model_id: "claude-3.5-haiku", target_spread: 0.09, item_spread: 0.08, single_plan_on_even: true, failed_inputs: &[], disclaimer: true, reorder_names: false },
    DemoModel { model_id: "deepseek-v3", target_spread: 0.06, item_spread: 0.04, single_plan_on_even: false, failed_inputs: &[4, 5, 6, 7], disclaimer: false, reorder_names: false },
];

#[derive(Debug, Clone)]
pub struct DemoLayout {
    pub root: PathBuf,
    pub config: PathBuf,
    pub manifest: PathBuf,
    pub stub_dir: PathBuf,
    pub food_csv: PathBuf,
    pub nutrient_csv: PathBuf,
}

/// The sample intake as a profile over [`synthetic_records`] ids.
pub fn sample_profile() -> ConsumptionProfile {
    let entries: Vec<ProfileEntry> = SAMPLE_INTAKE
        .iter()
        .enumerate()
        .map(|(i, (name, _, _, _, qty))| ProfileEntry { food_id: (100_001 + i).to_string(), name: (*name).into(), quantity: *qty })
        .collect();
    ConsumptionProfile {
        profile_id: "sample".into(),
        entries,
        targets: NutritionTargets { total_calories: 1573.25, target_protein: 54.0, target_sugar: 58.3, duration_days: 7 },
        totals: NutrientVector::zero(),
    }
}

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Every food in the demo export, sample intake first. Ids start at 100001.
pub fn synthetic_records() -> Vec<FoodRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
    let mut out = Vec::new();
    for (name, kcal, protein, sugar, _) in SAMPLE_INTAKE {
        let n = NutrientVector::new(kcal, protein, sugar, round1(kcal / 25.0), round1(kcal / 9.0));
        out.push(FoodRecord::new((100_001 + out.len()).to_string(), name, "100 g", 100.0, n));
    }
    for base in BASES {
        for variant in VARIANTS {
            let name = if variant.is_empty() { base.to_owned() } else { format!("{base}, {variant}") };
            let kcal = f64::from(rng.gen_range(60u32..=450));
            let protein = round1(rng.gen_range(0.5..30.0));
            let fat = round1(rng.gen_range(0.2..25.0));
            let carbohydrate = round1(rng.gen_range(0.0..60.0));
            let sugar = round1(rng.gen_range(0.0..carbohydrate.max(0.1)));
            let n = NutrientVector::new(kcal, protein, sugar, fat, carbohydrate);
            out.push(FoodRecord::new((100_001 + out.len()).to_string(), name, "100 g", 100.0, n));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_owned() }
}

fn write_fdc(dir: &Path, records: &[FoodRecord]) -> io::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let mut food = String::from("fdc_id,data_type,description\n");
    let mut nutrient = String::from("id,fdc_id,nutrient_id,amount\n");
    let mut row = 1;
    for r in records {
        let _ = writeln!(food, "{},survey_fndds_food,{}", r.id, csv_field(&r.display_name));
        let n = &r.per_serving;
        for (id, v) in [
            (NutrientId::Energy, n.calories),
            (NutrientId::Protein, n.protein),
            (NutrientId::Fat, n.fat),
            (NutrientId::Carbohydrate, n.carbohydrate),
            (NutrientId::Sugar, n.sugar),
        ] {
            let _ = writeln!(nutrient, "{row},{},{},{v}", r.id, id.fdc_id());
            row += 1;
        }
    }
    for (k, name) in DROPPED_FOODS.iter().enumerate() {
        let id = 900_001 + k;
        let _ = writeln!(food, "{id},survey_fndds_food,{name}");
        let _ = writeln!(nutrient, "{row},{id},{},3.5", NutrientId::Protein.fdc_id());
        row += 1;
    }
    let food_csv = dir.join("food.csv");
    let nutrient_csv = dir.join("food_nutrient.csv");
    fs::write(&food_csv, food)?;
    fs::write(&nutrient_csv, nutrient)?;
    Ok((food_csv, nutrient_csv))
}

fn cell_rng(model: &str, input: usize, seed: u64) -> ChaCha8Rng {
    let salt = model.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed ^ salt ^ (input as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn reorder(name: &str) -> String {
    match name.split_once(", ") {
        Some((base, variant)) => format!("{variant} {}", base.to_lowercase()),
        None => name.to_lowercase(),
    }
}

/// Builds one plan whose catalog total lands near `target`.
fn demo_plan(model: &DemoModel, option_index: usize, target: f64, pool: &[FoodRecord], rng: &mut ChaCha8Rng) -> MealPlan {
    let layout = [(MealKind::Breakfast, 2), (MealKind::Lunch, 2), (MealKind::Dinner, 2), (MealKind::Snacks, 1)];
    let picks: Vec<Vec<&FoodRecord>> = layout
        .iter()
        .map(|(_, n)| (0..*n).map(|_| &pool[rng.gen_range(0..pool.len())]).collect())
        .collect();
    let base: f64 = picks.iter().flatten().map(|r| r.per_serving.calories).sum();
    let desired = target * (1.0 + rng.gen_range(-model.target_spread..=model.target_spread));
    let factor = desired / base;

    let mut plan = MealPlan::new(option_index);
    let mut macros = NutrientVector::zero();
    for ((kind, _), records) in layout.iter().zip(&picks) {
        let mut meal = Meal::default();
        let mut meal_kcal = 0.0;
        for r in records {
            let grams = (r.serving_grams * factor).round().max(10.0);
            let scaled = r.per_serving.scale(grams / r.serving_grams);
            macros += scaled;
            let reported = (scaled.calories * (1.0 + rng.gen_range(-model.item_spread..=model.item_spread))).round();
            meal_kcal += reported;
            let name = if model.reorder_names { reorder(&r.display_name) } else { r.display_name.replace('_', " ") };
            meal.items.push(MealItem {
                name,
                portion: PortionSpec { grams: Some(grams), count: None, raw: format!("{grams}g") },
                reported_kcal: Some(reported),
                recipe: Some(format!("Prepare {grams} g and serve warm or chilled as preferred.")),
            });
        }
        meal.reported_kcal = Some(meal_kcal);
        plan.meals.insert(*kind, meal);
    }
    let calories = plan.meals.values().filter_map(|m| m.reported_kcal).sum();
    plan.reported_totals = ReportedTotals {
        calories: Some(calories),
        fat: Some(round1(macros.fat)),
        protein: Some(round1(macros.protein)),
        carbohydrate: Some(round1(macros.carbohydrate)),
    };
    plan.disclaimer_present = model.disclaimer;
    plan
}

/// Canonical transcript for one (model, profile) cell, or `None` for a
/// deliberate failure.
pub fn demo_transcript(model: &DemoModel, input: usize, profile: &ConsumptionProfile, pool: &[FoodRecord], seed: u64) -> Option<String> {
    if model.failed_inputs.contains(&input) {
        return None;
    }
    let mut rng = cell_rng(model.model_id, input, seed);
    let count = if model.single_plan_on_even && input.is_multiple_of(2) { 1 } else { 3 };
    let plans: Vec<MealPlan> =
        (1..=count).map(|j| demo_plan(model, j, profile.targets.total_calories, pool, &mut rng)).collect();
    Some(emit_plans(&plans))
}

/// Writes the export, transcripts, manifest and `config.json` under `root`.
/// `pool_size` and `profile_count` must match what the config will use.
pub fn write_demo(root: &Path, seed: u64, pool_size: usize, profile_count: usize) -> io::Result<DemoLayout> {
    let records = synthetic_records();
    let (food_csv, nutrient_csv) = write_fdc(&root.join("fdc"), &records)?;
    let catalog: Catalog = load_catalog(&food_csv, &nutrient_csv, None).map_err(io::Error::other)?;
    let pool = sample_pool(&catalog, pool_size, seed).map_err(io::Error::other)?;
    let profiles = generate_profiles(&pool, profile_count, seed, &ProfileSettings::default()).map_err(io::Error::other)?;

    let stub_dir = root.join("stub");
    for model in &DEMO_MODELS {
        let dir = stub_dir.join(model.model_id);
        fs::create_dir_all(&dir)?;
        for (i, profile) in profiles.iter().enumerate() {
            let path = dir.join(format!("{}.txt", profile.profile_id));
            match demo_transcript(model, i + 1, profile, catalog.records(), seed) {
                Some(text) => fs::write(path, text)?,
                None if path.exists() => fs::remove_file(path)?,
                None => {}
            }
        }
    }

    let manifest = root.join("stub_manifest.json");
    let models: Vec<_> = DEMO_MODELS
        .iter()
        .map(|m| json!({"model_id": m.model_id, "provider": "stub", "model_name": m.model_id, "fixture_dir": "stub"}))
        .collect();
    fs::write(&manifest, serde_json::to_string_pretty(&json!({ "models": models }))? + "\n")?;

    let config = root.join("config.json");
    let cfg = json!({
        "food_csv": "fdc/food.csv",
        "nutrient_csv": "fdc/food_nutrient.csv",
        "manifest": "stub_manifest.json",
        "seed": seed,
        "pool_size": pool_size,
        "profile_count": profile_count,
        "parallelism": 2,
        "retry_base_ms": 0,
        "out": "out",
    });
    fs::write(&config, serde_json::to_string_pretty(&cfg)? + "\n")?;
    Ok(DemoLayout { root: root.to_path_buf(), config, manifest, stub_dir, food_csv, nutrient_csv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_plans;
    use crate::profile::compute_totals;

    #[test]
    fn catalog_shape() {
        let dir = tempfile::tempdir().unwrap();
        let layout = write_demo(dir.path(), 42, 200, 10).unwrap();
        let catalog: Catalog = load_catalog(&layout.food_csv, &layout.nutrient_csv, None).unwrap();
        assert_eq!(catalog.len(), 8 + BASES.len() * VARIANTS.len());
        assert_eq!(catalog.dropped(), DROPPED_FOODS.len());
        assert_eq!(catalog.records(), &synthetic_records()[..]);
    }

    #[test]
    fn sample_totals() {
        let catalog = Catalog::from_records(synthetic_records(), 0).unwrap();
        let t = compute_totals(&sample_profile(), &catalog).unwrap();
        assert_eq!((t.calories, t.protein, t.sugar), (1573.25, 54.0, 58.3));
    }

    #[test]
    fn transcripts_parse_with_expected_shape() {
        let records = synthetic_records();
        let profile = sample_profile();
        for model in &DEMO_MODELS {
            for input in 1..=10 {
                let Some(text) = demo_transcript(model, input, &profile, &records, 42) else {
                    assert!(model.failed_inputs.contains(&input));
                    continue;
                };
                let (plans, warnings) = parse_plans::<f64>(&text);
                assert!(warnings.is_empty(), "{}: {warnings:?}", model.model_id);
                let expected = if model.single_plan_on_even && input % 2 == 0 { 1 } else { 3 };
                assert_eq!(plans.len(), expected);
            }
        }
    }
}
