//! Token-set Jaccard matching of free-text food mentions against the catalog.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Minimum Jaccard score for a confirmed match.
pub const DEFAULT_MATCH_THRESHOLD: &str = "0.6";

pub fn default_threshold<T: Scalar>() -> T {
    T::parse_decimal(DEFAULT_MATCH_THRESHOLD).expect("threshold literal parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    Exact,
    TokenSet,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult<T = f64> {
    pub query: String,
    /// Present only when `score` reaches the threshold.
    pub matched_id: Option<String>,
    /// Best-scoring record regardless of the threshold.
    pub candidate_id: Option<String>,
    pub score: T,
    pub method: MatchMethod,
}

impl<T: Scalar> MatchResult<T> {
    pub fn unmatched(query: &str) -> Self {
        Self {
            query: query.to_owned(),
            matched_id: None,
            candidate_id: None,
            score: T::zero(),
            method: MatchMethod::None,
        }
    }

    pub fn is_match(&self) -> bool {
        self.matched_id.is_some()
    }
}

/// |a ∩ b| / |a ∪ b|, with two empty sets scoring 0.
pub fn jaccard<T: Scalar, S: Ord>(a: &BTreeSet<S>, b: &BTreeSet<S>) -> T {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return T::zero();
    }
    <T as Scalar>::from_usize(inter) / <T as Scalar>::from_usize(union)
}

/// Ranking order: score descending, exact before token-set, then display name.
pub(crate) fn rank_order<T: Scalar>(
    a: (&T, MatchMethod, &str),
    b: (&T, MatchMethod, &str),
) -> Ordering {
    b.0.partial_cmp(a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| (a.1 != MatchMethod::Exact).cmp(&(b.1 != MatchMethod::Exact)))
        .then_with(|| a.2.cmp(b.2))
}
