//! Immutable nutrient catalog built from FoodData Central exports.

mod fdc;
pub mod matching;
pub mod normalize;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fdc::{load_catalog, load_catalog_from_readers, NutrientId};
pub use matching::{default_threshold, jaccard, MatchMethod, MatchResult, DEFAULT_MATCH_THRESHOLD};
pub use normalize::normalize;

use crate::nutrients::NutrientVector;
use crate::parser::PortionSpec;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("duplicate food id `{0}`")]
    DuplicateId(String),
    #[error("catalog has no usable records")]
    EmptyCatalog,
    #[error("portion has neither grams nor count")]
    InvalidPortion,
    #[error("record `{0}` violates catalog invariants")]
    InvalidRecord(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoodRecord<T = f64> {
    pub id: String,
    pub display_name: String,
    pub normalized_tokens: BTreeSet<String>,
    pub serving_desc: String,
    pub serving_grams: T,
    pub per_serving: NutrientVector<T>,
    /// Set when a macro value was missing and defaulted to zero.
    #[serde(default)]
    pub incomplete: bool,
}

impl<T: Scalar> FoodRecord<T> {
    pub fn new(
        id: impl Into<String>,
        display_name: impl Into<String>,
        serving_desc: impl Into<String>,
        serving_grams: T,
        per_serving: NutrientVector<T>,
    ) -> Self {
        let display_name = display_name.into();
        Self {
            id: id.into(),
            normalized_tokens: normalize::token_set(&display_name),
            display_name,
            serving_desc: serving_desc.into(),
            serving_grams,
            per_serving,
            incomplete: false,
        }
    }

    pub fn normalized_name(&self) -> String {
        normalize(&self.display_name)
    }

    fn check(&self) -> Result<(), CatalogError> {
        let ok = !self.normalized_tokens.is_empty()
            && self.serving_grams.is_finite_value()
            && self.serving_grams > T::zero()
            && self.per_serving.is_valid();
        if ok {
            Ok(())
        } else {
            Err(CatalogError::InvalidRecord(self.id.clone()))
        }
    }
}

/// Read-only after construction; share it freely across threads.
#[derive(Debug, Clone)]
pub struct Catalog<T = f64> {
    records: Vec<FoodRecord<T>>,
    by_id: HashMap<String, usize>,
    by_name: HashMap<String, usize>,
    token_index: HashMap<String, Vec<usize>>,
    dropped: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
struct CatalogFile<T> {
    dropped: usize,
    records: Vec<FoodRecord<T>>,
}

impl<T: Scalar> Catalog<T> {
    /// Builds a catalog, validating ids and record invariants.
    pub fn from_records(records: Vec<FoodRecord<T>>, dropped: usize) -> Result<Self, CatalogError> {
        if records.is_empty() {
            return Err(CatalogError::EmptyCatalog);
        }
        let mut by_id = HashMap::with_capacity(records.len());
        let mut by_name = HashMap::with_capacity(records.len());
        let mut token_index: HashMap<String, Vec<usize>> = HashMap::new();
        for (idx, record) in records.iter().enumerate() {
            record.check()?;
            if by_id.insert(record.id.clone(), idx).is_some() {
                return Err(CatalogError::DuplicateId(record.id.clone()));
            }
            by_name.entry(record.normalized_name()).or_insert(idx);
            for token in &record.normalized_tokens {
                token_index.entry(token.clone()).or_default().push(idx);
            }
        }
        Ok(Self { records, by_id, by_name, token_index, dropped })
    }

    pub fn records(&self) -> &[FoodRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rows discarded at ingest (no energy value, no usable name).
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn get(&self, id: &str) -> Option<&FoodRecord<T>> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn lookup_exact(&self, name: &str) -> Option<&FoodRecord<T>> {
        let key = normalize(name);
        if key.is_empty() {
            return None;
        }
        self.by_name.get(&key).map(|&i| &self.records[i])
    }

    /// Top-`k` records by token-set Jaccard similarity.
    ///
    /// Only records sharing at least one token with the query are scored.
    /// Results below `threshold` keep their score and candidate but carry no
    /// `matched_id`.
    pub fn match_fuzzy(&self, name: &str, k: usize, threshold: T) -> Vec<MatchResult<T>> {
        if k == 0 {
            return Vec::new();
        }
        let query_norm = normalize(name);
        let query_tokens = normalize::token_set(name);
        let mut candidates: BTreeSet<usize> = BTreeSet::new();
        for token in &query_tokens {
            if let Some(idxs) = self.token_index.get(token) {
                candidates.extend(idxs.iter().copied());
            }
        }
        let mut scored: Vec<(T, MatchMethod, usize)> = candidates
            .into_iter()
            .map(|idx| {
                let record = &self.records[idx];
                if !query_norm.is_empty() && record.normalized_name() == query_norm {
                    (T::one(), MatchMethod::Exact, idx)
                } else {
                    (jaccard(&query_tokens, &record.normalized_tokens), MatchMethod::TokenSet, idx)
                }
            })
            .collect();
        scored.sort_by(|a, b| {
            matching::rank_order(
                (&a.0, a.1, self.records[a.2].display_name.as_str()),
                (&b.0, b.1, self.records[b.2].display_name.as_str()),
            )
            .then(a.2.cmp(&b.2))
        });
        scored
            .into_iter()
            .take(k)
            .map(|(score, method, idx)| {
                let id = self.records[idx].id.clone();
                let confirmed = score >= threshold;
                MatchResult {
                    query: name.to_owned(),
                    matched_id: confirmed.then(|| id.clone()),
                    candidate_id: Some(id),
                    score,
                    method: if confirmed { method } else { MatchMethod::None },
                }
            })
            .collect()
    }

    /// Best match or an explicit unmatched result.
    pub fn best_match(&self, name: &str, threshold: T) -> MatchResult<T> {
        self.match_fuzzy(name, 1, threshold)
            .into_iter()
            .next()
            .unwrap_or_else(|| MatchResult::unmatched(name))
    }

    pub fn to_json(&self) -> serde_json::Result<String>
    where
        T: Serialize,
    {
        serde_json::to_string_pretty(&CatalogFile { dropped: self.dropped, records: self.records.clone() })
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError>
    where
        T: for<'de> Deserialize<'de>,
    {
        let file: CatalogFile<T> = serde_json::from_str(text).map_err(|e| {
            CatalogError::Io { path: PathBuf::from("<catalog json>"), source: e.into() }
        })?;
        Self::from_records(file.records, file.dropped)
    }
}

/// Scales a record's per-serving nutrients to a stated portion.
///
/// A gram weight wins over a count; the two are never combined.
pub fn scale_nutrients<T: Scalar>(
    record: &FoodRecord<T>,
    portion: &PortionSpec<T>,
) -> Result<NutrientVector<T>, CatalogError> {
    let positive = |v: Option<T>| v.filter(|x| x.is_finite_value() && *x > T::zero());
    if let Some(grams) = positive(portion.grams) {
        Ok(record.per_serving.scale(grams / record.serving_grams))
    } else if let Some(count) = positive(portion.count) {
        Ok(record.per_serving.scale(count))
    } else {
        Err(CatalogError::InvalidPortion)
    }
}
