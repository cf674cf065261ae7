//! Food-name normalization shared by exact lookup and fuzzy matching.

use std::collections::BTreeSet;

/// Tokens that carry no identity for a food name.
pub const STOP_TOKENS: [&str; 5] = ["a", "an", "the", "with", "of"];

const PROFILE_PREFIX: &str = "food_";

/// Normalizes a food mention into space-separated tokens.
///
/// Lowercases, strips a leading `Food_` profile prefix, turns underscores and
/// punctuation into spaces, collapses whitespace and drops stop tokens. No
/// stemming is applied.
pub fn normalize(name: &str) -> String {
    tokens(name).join(" ")
}

/// Ordered normalized tokens (duplicates kept).
pub fn tokens(name: &str) -> Vec<String> {
    let lowered = name.trim().to_lowercase();
    let body = lowered.strip_prefix(PROFILE_PREFIX).unwrap_or(&lowered);
    let spaced: String = body
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    spaced
        .split_whitespace()
        .filter(|t| !STOP_TOKENS.contains(t))
        .map(str::to_owned)
        .collect()
}

pub fn token_set(name: &str) -> BTreeSet<String> {
    tokens(name).into_iter().collect()
}
