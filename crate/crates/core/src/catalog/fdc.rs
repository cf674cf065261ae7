//! FoodData Central CSV ingestion (`food`, `food_nutrient`, `food_portion`).

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{Catalog, CatalogError, FoodRecord};
use crate::nutrients::NutrientVector;
use crate::scalar::Scalar;

/// FDC nutrient ids consumed at ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NutrientId {
    Energy,
    Protein,
    Fat,
    Carbohydrate,
    Sugar,
}

impl NutrientId {
    pub fn from_fdc(id: u32) -> Option<Self> {
        match id {
            1008 => Some(Self::Energy),
            1003 => Some(Self::Protein),
            1004 => Some(Self::Fat),
            1005 => Some(Self::Carbohydrate),
            2000 => Some(Self::Sugar),
            _ => None,
        }
    }

    pub fn fdc_id(self) -> u32 {
        match self {
            Self::Energy => 1008,
            Self::Protein => 1003,
            Self::Fat => 1004,
            Self::Carbohydrate => 1005,
            Self::Sugar => 2000,
        }
    }
}

struct Table {
    name: String,
    headers: HashMap<String, usize>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(name: &str, reader: R) -> Result<Self, CatalogError> {
        let csv_err = |source| CatalogError::Csv { file: name.to_owned(), source };
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_owned(), i))
            .collect();
        let rows = rdr.records().collect::<Result<Vec<_>, _>>().map_err(csv_err)?;
        Ok(Self { name: name.to_owned(), headers, rows })
    }

    fn column(&self, column: &str) -> Result<usize, CatalogError> {
        self.headers.get(column).copied().ok_or_else(|| CatalogError::MissingColumn {
            file: self.name.clone(),
            column: column.to_owned(),
        })
    }
}

fn open(path: &Path) -> Result<File, CatalogError> {
    File::open(path).map_err(|source| CatalogError::Io { path: path.to_owned(), source })
}

/// Loads a catalog from FDC CSV exports on disk.
pub fn load_catalog<T: Scalar>(
    food_table: &Path,
    nutrient_table: &Path,
    portion_table: Option<&Path>,
) -> Result<Catalog<T>, CatalogError> {
    let food = open(food_table)?;
    let nutrient = open(nutrient_table)?;
    let portion = portion_table.map(open).transpose()?;
    load_catalog_from_readers(food, nutrient, portion)
}

/// Same as [`load_catalog`] over arbitrary readers.
///
/// Amounts are per 100 g. When the portion table carries a labeled serving
/// for a food, the first such row becomes the serving and nutrients are
/// rescaled to it. Foods with no energy value are dropped; missing macros
/// default to zero and mark the record incomplete.
pub fn load_catalog_from_readers<T: Scalar, R: Read>(
    food_table: R,
    nutrient_table: R,
    portion_table: Option<R>,
) -> Result<Catalog<T>, CatalogError> {
    let foods = Table::read("food", food_table)?;
    let nutrients = Table::read("food_nutrient", nutrient_table)?;
    let portions = portion_table.map(|r| Table::read("food_portion", r)).transpose()?;

    let food_id = foods.column("fdc_id")?;
    let food_desc = foods.column("description")?;
    let nut_food = nutrients.column("fdc_id")?;
    let nut_id = nutrients.column("nutrient_id")?;
    let nut_amount = nutrients.column("amount")?;

    let mut amounts: HashMap<&str, HashMap<NutrientId, T>> = HashMap::new();
    for row in &nutrients.rows {
        let Some(kind) = row.get(nut_id).and_then(|s| s.parse::<u32>().ok()).and_then(NutrientId::from_fdc)
        else {
            continue;
        };
        let Some(amount) = row
            .get(nut_amount)
            .and_then(T::parse_decimal)
            .filter(|v| *v >= T::zero())
        else {
            continue;
        };
        let fdc = row.get(nut_food).unwrap_or_default();
        amounts.entry(fdc).or_default().entry(kind).or_insert(amount);
    }

    let mut servings: HashMap<&str, (T, String)> = HashMap::new();
    if let Some(portions) = &portions {
        let p_food = portions.column("fdc_id")?;
        let p_grams = portions.column("gram_weight")?;
        let p_desc = portions.column("portion_description")?;
        let p_modifier = portions.headers.get("modifier").copied();
        for row in &portions.rows {
            let Some(grams) = row.get(p_grams).and_then(T::parse_decimal).filter(|g| *g > T::zero()) else {
                continue;
            };
            let label = [Some(p_desc), p_modifier]
                .into_iter()
                .flatten()
                .filter_map(|c| row.get(c))
                .find(|s| !s.is_empty());
            if let Some(label) = label {
                servings
                    .entry(row.get(p_food).unwrap_or_default())
                    .or_insert_with(|| (grams, label.to_owned()));
            }
        }
    }

    let hundred = T::from_u32(100).expect("100 fits");
    let mut seen = std::collections::HashSet::new();
    let mut records = Vec::new();
    let mut dropped = 0usize;
    for row in &foods.rows {
        let id = row.get(food_id).unwrap_or_default();
        if !seen.insert(id.to_owned()) {
            return Err(CatalogError::DuplicateId(id.to_owned()));
        }
        let name = row.get(food_desc).unwrap_or_default();
        let values = amounts.get(id);
        let Some(energy) = values.and_then(|v| v.get(&NutrientId::Energy)).copied() else {
            dropped += 1;
            continue;
        };
        let mut incomplete = false;
        let mut macro_value = |kind| {
            values.and_then(|v| v.get(&kind)).copied().unwrap_or_else(|| {
                incomplete = true;
                T::zero()
            })
        };
        let per_100 = NutrientVector::new(
            energy,
            macro_value(NutrientId::Protein),
            macro_value(NutrientId::Sugar),
            macro_value(NutrientId::Fat),
            macro_value(NutrientId::Carbohydrate),
        );
        let (serving_grams, serving_desc, per_serving) = match servings.get(id) {
            Some((grams, label)) => (*grams, label.clone(), per_100.scale(*grams / hundred)),
            None => (hundred, "100 g".to_owned(), per_100),
        };
        let mut record = FoodRecord::new(id, name, serving_desc, serving_grams, per_serving);
        record.incomplete = incomplete;
        if record.normalized_tokens.is_empty() || id.is_empty() {
            dropped += 1;
            continue;
        }
        records.push(record);
    }
    if dropped > 0 {
        log::info!("dropped {dropped} food rows without an energy value or usable name");
    }
    Catalog::from_records(records, dropped)
}
