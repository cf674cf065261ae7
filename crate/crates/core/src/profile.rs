//! Seeded synthesis of daily intake profiles and nutrition targets.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, FoodRecord};
use crate::nutrients::NutrientVector;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("catalog has {available} records, pool needs {requested}")]
    InsufficientCatalog { requested: usize, available: usize },
    #[error("food pool is empty")]
    EmptyPool,
    #[error("food `{0}` is not in the catalog")]
    UnresolvedFood(String),
    #[error("invalid profile settings: {0}")]
    InvalidSettings(String),
}

/// Knobs for profile synthesis. Defaults follow the experiment this harness
/// was built for; every value can be overridden from the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileSettings {
    pub min_entries: usize,
    pub max_entries: usize,
    pub quantity_grid: Vec<f64>,
    pub min_calories: f64,
    pub max_calories: f64,
    pub calorie_step: f64,
    /// Grams of protein per kcal of target.
    pub protein_per_kcal: f64,
    /// Grams of sugar per kcal of target.
    pub sugar_per_kcal: f64,
    pub durations_days: Vec<u32>,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self {
            min_entries: 5,
            max_entries: 10,
            quantity_grid: vec![0.5, 1.0, 1.5, 2.0],
            min_calories: 1500.0,
            max_calories: 3500.0,
            calorie_step: 50.0,
            protein_per_kcal: 0.03,
            sugar_per_kcal: 0.035,
            durations_days: vec![7, 14, 30],
        }
    }
}

impl ProfileSettings {
    fn validate(&self) -> Result<(), ProfileError> {
        let bad = |m: &str| Err(ProfileError::InvalidSettings(m.to_owned()));
        if self.min_entries == 0 || self.min_entries > self.max_entries {
            return bad("entry range");
        }
        if self.quantity_grid.is_empty() || self.quantity_grid.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
            return bad("quantity grid");
        }
        if !(self.min_calories > 0.0 && self.min_calories <= self.max_calories && self.calorie_step > 0.0) {
            return bad("calorie range");
        }
        if self.durations_days.is_empty() || self.durations_days.contains(&0) {
            return bad("durations");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NutritionTargets<T = f64> {
    pub total_calories: T,
    pub target_protein: T,
    pub target_sugar: T,
    pub duration_days: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry<T = f64> {
    pub food_id: String,
    /// Display name, carried along so prompts can be rendered without the catalog.
    #[serde(default)]
    pub name: String,
    pub quantity: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionProfile<T = f64> {
    pub profile_id: String,
    pub entries: Vec<ProfileEntry<T>>,
    pub targets: NutritionTargets<T>,
    pub totals: NutrientVector<T>,
}

/// Records drawn from the catalog, in sampled order.
#[derive(Debug, Clone, PartialEq)]
pub struct FoodPool<T = f64> {
    pub records: Vec<FoodRecord<T>>,
}

impl<T: Scalar> FoodPool<T> {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }
}

fn to_scalar<T: Scalar>(v: f64) -> T {
    T::parse_decimal(&format!("{v}")).expect("finite setting converts")
}

fn round1<T: Scalar>(v: f64) -> T {
    T::parse_decimal(&format!("{:.1}", v)).expect("finite value converts")
}

/// Draws `pool_size` distinct records.
pub fn sample_pool<T: Scalar>(catalog: &Catalog<T>, pool_size: usize, seed: u64) -> Result<FoodPool<T>, ProfileError> {
    if pool_size > catalog.len() {
        return Err(ProfileError::InsufficientCatalog { requested: pool_size, available: catalog.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, catalog.len(), pool_size);
    Ok(FoodPool { records: picked.into_iter().map(|i| catalog.records()[i].clone()).collect() })
}

/// Exact weighted sum of per-serving nutrients.
pub fn totals_from_records<'a, T: Scalar>(
    entries: impl IntoIterator<Item = (&'a FoodRecord<T>, T)>,
) -> NutrientVector<T> {
    entries.into_iter().map(|(record, qty)| record.per_serving.scale(qty)).sum()
}

pub fn compute_totals<T: Scalar>(profile: &ConsumptionProfile<T>, catalog: &Catalog<T>) -> Result<NutrientVector<T>, ProfileError> {
    let resolved = profile
        .entries
        .iter()
        .map(|e| {
            catalog
                .get(&e.food_id)
                .map(|r| (r, e.quantity))
                .ok_or_else(|| ProfileError::UnresolvedFood(e.food_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(totals_from_records(resolved))
}

/// Profile ids are `input_1` .. `input_N`.
pub fn profile_id(index: usize) -> String {
    format!("input_{}", index + 1)
}

pub fn generate_profiles<T: Scalar>(
    pool: &FoodPool<T>,
    count: usize,
    seed: u64,
    settings: &ProfileSettings,
) -> Result<Vec<ConsumptionProfile<T>>, ProfileError> {
    settings.validate()?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if pool.records.is_empty() {
        return Err(ProfileError::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let grid: Vec<T> = settings.quantity_grid.iter().map(|q| to_scalar(*q)).collect();

    let mut profiles = Vec::with_capacity(count);
    for i in 0..count {
        let n = rng
            .gen_range(settings.min_entries..=settings.max_entries)
            .min(pool.records.len());
        let picked = index::sample(&mut rng, pool.records.len(), n);
        let entries: Vec<ProfileEntry<T>> = picked
            .into_iter()
            .map(|idx| {
                let record = &pool.records[idx];
                ProfileEntry {
                    food_id: record.id.clone(),
                    name: record.display_name.clone(),
                    quantity: *grid.choose(&mut rng).expect("grid not empty"),
                }
            })
            .collect();

        let drawn = rng.gen_range(settings.min_calories..=settings.max_calories);
        let step = settings.calorie_step;
        let calories = ((drawn / step).round() * step).clamp(settings.min_calories, settings.max_calories);
        let duration_days = *settings.durations_days.choose(&mut rng).expect("durations not empty");
        let targets = NutritionTargets {
            total_calories: to_scalar(calories),
            target_protein: round1(settings.protein_per_kcal * calories),
            target_sugar: round1(settings.sugar_per_kcal * calories),
            duration_days,
        };

        let by_id: std::collections::HashMap<&str, &FoodRecord<T>> =
            pool.records.iter().map(|r| (r.id.as_str(), r)).collect();
        let totals = totals_from_records(entries.iter().map(|e| (by_id[e.food_id.as_str()], e.quantity)));
        profiles.push(ConsumptionProfile { profile_id: profile_id(i), entries, targets, totals });
    }
    Ok(profiles)
}

pub fn profiles_to_json<T: Scalar + Serialize>(profiles: &[ConsumptionProfile<T>]) -> serde_json::Result<String> {
    serde_json::to_string_pretty(profiles)
}

pub fn profiles_from_json<T: Scalar + for<'de> Deserialize<'de>>(text: &str) -> serde_json::Result<Vec<ConsumptionProfile<T>>> {
    serde_json::from_str(text)
}
