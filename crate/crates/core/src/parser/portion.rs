//! Portion phrases: "1 Kit Kat bar (45g)", "2 pancakes", "1/2 cup".

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortionSpec<T = f64> {
    pub grams: Option<T>,
    pub count: Option<T>,
    /// Original text, always preserved.
    pub raw: String,
}

impl<T: Scalar> PortionSpec<T> {
    pub fn raw_only(raw: impl Into<String>) -> Self {
        Self { grams: None, count: None, raw: raw.into() }
    }

    pub fn is_resolved(&self) -> bool {
        self.grams.is_some() || self.count.is_some()
    }
}

static PAREN_GRAMS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\(\s*(\d+(?:\.\d+)?)\s*(?:g|grams?)\s*\)").unwrap());
static LEADING_GRAMS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(\d+(?:\.\d+)?)\s*(?:g|grams?)\b").unwrap());
static LEADING_COUNT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:(\d+)\s+(\d+)/(\d+)|(\d+)/(\d+)|(\d+(?:\.\d+)?)|([½¼¾⅓⅔]))(?:\s|$)").unwrap()
});

/// Unit words that may follow a leading count and are not part of the food name.
pub(crate) const UNIT_WORDS: &[&str] = &[
    "cup", "cups", "slice", "slices", "tbsp", "tablespoon", "tablespoons", "tsp", "teaspoon",
    "teaspoons", "oz", "ounce", "ounces", "piece", "pieces", "serving", "servings", "bowl",
    "bowls", "glass", "glasses", "handful", "handfuls", "ml", "scoop", "scoops", "small",
    "medium", "large", "whole", "fillet", "fillets", "can", "cans", "bar", "bars", "pack",
    "packet", "stick", "sticks", "portion", "portions", "plate",
];

fn unicode_fraction<T: Scalar>(c: &str) -> Option<T> {
    let (n, d) = match c {
        "½" => (1, 2),
        "¼" => (1, 4),
        "¾" => (3, 4),
        "⅓" => (1, 3),
        "⅔" => (2, 3),
        _ => return None,
    };
    Some(T::from_u32(n)? / T::from_u32(d)?)
}

fn ratio<T: Scalar>(n: &str, d: &str) -> Option<T> {
    let d = T::parse_decimal(d).filter(|d| !d.is_zero())?;
    Some(T::parse_decimal(n)? / d)
}

/// Leading count and the byte length of the matched prefix.
pub(crate) fn leading_count<T: Scalar>(text: &str) -> Option<(T, usize)> {
    let caps = LEADING_COUNT.captures(text)?;
    let value = if let (Some(w), Some(n), Some(d)) = (caps.get(1), caps.get(2), caps.get(3)) {
        T::parse_decimal(w.as_str())? + ratio(n.as_str(), d.as_str())?
    } else if let (Some(n), Some(d)) = (caps.get(4), caps.get(5)) {
        ratio(n.as_str(), d.as_str())?
    } else if let Some(v) = caps.get(6) {
        T::parse_decimal(v.as_str())?
    } else {
        unicode_fraction(caps.get(7)?.as_str())?
    };
    (value > T::zero()).then_some((value, caps.get(0)?.end()))
}

/// Recognizes gram annotations and leading counts.
///
/// Unrecognized text yields a raw-only portion; the caller decides whether to warn.
pub fn extract_portion<T: Scalar>(text: &str) -> PortionSpec<T> {
    let raw = text.trim().to_owned();
    let paren = PAREN_GRAMS.captures(&raw).and_then(|c| T::parse_decimal(&c[1]));
    let leading = LEADING_GRAMS.captures(&raw).and_then(|c| T::parse_decimal(&c[1]));
    let grams = paren.or(leading).filter(|g| *g > T::zero());
    let count = if leading.is_some() { None } else { leading_count::<T>(&raw).map(|(c, _)| c) };
    PortionSpec { grams, count, raw }
}

/// Drops a leading count, an optional unit word and a following "of".
pub(crate) fn strip_quantity(text: &str) -> &str {
    let mut rest = match leading_count::<f64>(text) {
        Some((_, end)) => &text[end..],
        None => return text.trim(),
    };
    rest = rest.trim_start();
    if let Some((first, tail)) = rest.split_once(char::is_whitespace) {
        if UNIT_WORDS.contains(&first.to_lowercase().as_str()) && !tail.trim().is_empty() {
            rest = tail.trim_start();
        }
    }
    if let Some(tail) = rest.strip_prefix("of ") {
        rest = tail;
    }
    rest.trim()
}
