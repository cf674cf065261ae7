//! Tolerant parsing of free-text meal-plan responses.
//!
//! The grammar is line oriented. A plan starts at a `Meal Plan N` / `Option N`
//! header, meals at one of the four meal names, items at bullet lines, and
//! macro totals at a `Total` line or block. Everything the parser has to
//! guess at is reported as a [`ParseWarning`]; nothing here fails.

mod completeness;
mod emit;
mod portion;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use completeness::{grade_completeness, CompletenessFlags, DISCLAIMER_PHRASES};
pub use emit::{emit_plan, emit_plans};
pub use portion::{extract_portion, PortionSpec};

use crate::scalar::Scalar;

/// Hard cap on plans kept from one response.
pub const MAX_PLANS: usize = 10;
/// Number of options the prompt asks for.
pub const REQUESTED_PLANS: usize = 3;
/// Per-meal or per-item kcal above this is flagged (and kept).
pub const IMPLAUSIBLE_KCAL: u32 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MealKind {
    Breakfast,
    Lunch,
    Dinner,
    Snacks,
}

impl MealKind {
    pub const ALL: [MealKind; 4] = [Self::Breakfast, Self::Lunch, Self::Dinner, Self::Snacks];

    pub fn label(self) -> &'static str {
        match self {
            Self::Breakfast => "Breakfast",
            Self::Lunch => "Lunch",
            Self::Dinner => "Dinner",
            Self::Snacks => "Snacks",
        }
    }
}

impl fmt::Display for MealKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MealItem<T = f64> {
    pub name: String,
    pub portion: PortionSpec<T>,
    pub reported_kcal: Option<T>,
    pub recipe: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meal<T = f64> {
    pub items: Vec<MealItem<T>>,
    pub reported_kcal: Option<T>,
}

impl<T> Default for Meal<T> {
    fn default() -> Self {
        Self { items: Vec::new(), reported_kcal: None }
    }
}

/// Totals as printed by the model; any field may be missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportedTotals<T = f64> {
    pub calories: Option<T>,
    pub fat: Option<T>,
    pub protein: Option<T>,
    pub carbohydrate: Option<T>,
}

impl<T> Default for ReportedTotals<T> {
    fn default() -> Self {
        Self { calories: None, fat: None, protein: None, carbohydrate: None }
    }
}

impl<T: Copy> ReportedTotals<T> {
    pub fn is_empty(&self) -> bool {
        self.calories.is_none() && self.fat.is_none() && self.protein.is_none() && self.carbohydrate.is_none()
    }

    pub fn has_macros(&self) -> bool {
        self.calories.is_some() && self.fat.is_some() && self.protein.is_some() && self.carbohydrate.is_some()
    }

    fn missing(&self) -> Vec<&'static str> {
        [
            ("calories", self.calories.is_none()),
            ("fat", self.fat.is_none()),
            ("protein", self.protein.is_none()),
            ("carbohydrate", self.carbohydrate.is_none()),
        ]
        .into_iter()
        .filter_map(|(name, missing)| missing.then_some(name))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MealPlan<T = f64> {
    /// 1-based option number as printed (or recovered).
    pub option_index: usize,
    pub meals: BTreeMap<MealKind, Meal<T>>,
    pub reported_totals: ReportedTotals<T>,
    pub disclaimer_present: bool,
}

impl<T: Scalar> MealPlan<T> {
    pub fn new(option_index: usize) -> Self {
        Self {
            option_index,
            meals: BTreeMap::new(),
            reported_totals: ReportedTotals::default(),
            disclaimer_present: false,
        }
    }

    pub fn items(&self) -> impl Iterator<Item = &MealItem<T>> {
        self.meals.values().flat_map(|m| m.items.iter())
    }

    pub fn has_all_meals(&self) -> bool {
        MealKind::ALL.iter().all(|k| self.meals.get(k).is_some_and(|m| !m.items.is_empty()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseWarning {
    NoPlansFound,
    RecoveredHeader { option_index: usize },
    DuplicateOptionIndex { option_index: usize },
    EmptyPlanDropped { option_index: usize },
    ExtraPlans { found: usize },
    PlanCapExceeded { found: usize },
    MissingMeal { option_index: usize, meal: MealKind },
    DuplicateMeal { option_index: usize, meal: MealKind },
    UnlabeledMeal { option_index: usize, label: String },
    OrphanItem { option_index: usize, line: String },
    MissingMealKcal { option_index: usize, meal: MealKind },
    MissingItemKcal { option_index: usize, item: String },
    UnparsedPortion { option_index: usize, item: String },
    MissingMacroTotals { option_index: usize, missing: Vec<String> },
    UnparsedTotals { option_index: usize, line: String },
    DecimalComma { line: String },
    ImplausibleKcal { option_index: usize, value: String },
}

static PLAN_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:meal\s*plan(?:\s+option)?|option)\s*#?\s*([0-9]+)\b").unwrap());
static MEAL_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(breakfast|lunch|dinner|(?:(?:mid-?\s?morning|morning|afternoon|evening|late[- ]night)\s+)?snacks?)\b\s*(?:[:\-–—(~=]|\d|$)",
    )
    .unwrap()
});
static OTHER_MEAL_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^([a-z][a-z' \-]{1,30}?)\s*[:(\-–—]\s*~?\s*\d[\d,.]*\s*(?:kcal|calories|cal)\b").unwrap()
});
static TOTALS_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(?:(?:daily|grand|plan|overall|approximate|approx\.?|estimated)\s+)?(?:totals?\b|nutrition(?:al)?\s+(?:totals?|summary|information|info|breakdown)\b)",
    )
    .unwrap()
});
static TOTALS_FIELD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:total\s+)?(?:calories|energy|fat|protein|carbohydrates?|carbs)\s*[:=]").unwrap());
static MACRO_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:total\s+)?(?:fat|protein|carbohydrates?|carbs)\s*[:=]").unwrap());
static RECIPE_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:recipe|instructions|preparation|how to (?:make|prepare))\s*[:\-–—]\s*(.*)$").unwrap()
});
static KCAL_AFTER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(\d[\d,]*(?:\.\d+)?)\s*(?:kcal|calories|cals?)\b").unwrap());
static KCAL_BEFORE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:calories|kcal|energy)\s*[:=]?\s*~?\s*(\d[\d,]*(?:\.\d+)?)").unwrap());
static MACRO_AFTER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(fat|protein|carbohydrates?|carbs)\b\s*[:=]?\s*~?\s*(\d[\d,]*(?:\.\d+)?)\s*(?:g|grams)\b").unwrap()
});
static MACRO_BEFORE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(\d[\d,]*(?:\.\d+)?)\s*(?:g|grams)\s+(?:of\s+)?(fat|protein|carbohydrates?|carbs)\b").unwrap()
});
static THOUSANDS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d{1,3}(?:,\d{3})+(?:\.\d+)?$").unwrap());
static NUMBERED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+[.)]\s+").unwrap());

/// Meal labels outside the four requested ones; their items are filed under snacks.
const OTHER_MEAL_WORDS: &[&str] = &[
    "brunch", "dessert", "desserts", "supper", "treat", "pre-workout", "post-workout", "workout",
    "beverage", "beverages", "drink", "drinks", "appetizer", "elevenses", "tea",
];

const FILLER_WORDS: &[&str] =
    &["approx", "approximately", "about", "around", "total", "calories", "kcal", "cal", "estimated", "est", "meal"];

/// Parses a number token, accepting thousands separators and rejecting decimal commas.
fn parse_number<T: Scalar>(token: &str, warnings: &mut Vec<ParseWarning>, line: &str) -> Option<T> {
    if token.contains(',') {
        if THOUSANDS.is_match(token) {
            return T::parse_decimal(&token.replace(',', ""));
        }
        warnings.push(ParseWarning::DecimalComma { line: line.to_owned() });
        return None;
    }
    T::parse_decimal(token)
}

/// First kcal figure on a line: byte span of the whole expression and the value.
fn find_kcal<T: Scalar>(
    text: &str,
    warnings: &mut Vec<ParseWarning>,
) -> Option<(std::ops::Range<usize>, Option<T>)> {
    let after = KCAL_AFTER.captures(text);
    let before = KCAL_BEFORE.captures(text);
    let caps = match (after, before) {
        (Some(a), Some(b)) => {
            if b.get(0)?.start() < a.get(0)?.start() {
                b
            } else {
                a
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => return None,
    };
    let whole = caps.get(0)?;
    Some((whole.range(), parse_number(&caps[1], warnings, text)))
}

fn strip_markdown(line: &str) -> String {
    let cleaned = line.replace("**", "").replace("__", "");
    cleaned
        .trim_start_matches(|c: char| matches!(c, '#' | '*' | '-' | '+' | '•' | '>' | '–') || c.is_whitespace())
        .trim()
        .to_owned()
}

fn is_bullet(trimmed: &str) -> bool {
    let t = trimmed.trim_start_matches('>').trim_start();
    ["- ", "* ", "• ", "+ ", "– "].iter().any(|b| t.starts_with(b)) || NUMBERED.is_match(t)
}

fn has_disclaimer(text: &str) -> bool {
    let lower = text.to_lowercase();
    DISCLAIMER_PHRASES.iter().any(|p| lower.contains(p))
}

/// Index of the `(` that opens the final balanced group ending the string.
fn last_group_start(s: &str) -> Option<usize> {
    if !s.ends_with(')') {
        return None;
    }
    let mut depth = 0i32;
    for (i, c) in s.char_indices().rev() {
        match c {
            ')' => depth += 1,
            '(' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn trim_separators(s: &str) -> &str {
    let mut s = s.trim_matches(|c: char| c.is_whitespace() || matches!(c, '—' | '–' | '-' | ':' | ',' | ';' | '=' | '~' | '|'));
    loop {
        let lower = s.to_lowercase();
        let Some(word) = FILLER_WORDS.iter().find(|w| {
            lower.ends_with(*w) && lower[..lower.len() - w.len()].ends_with([' ', '(', '~'])
        }) else {
            break;
        };
        s = s[..s.len() - word.len()].trim_end_matches(|c: char| c.is_whitespace() || c == '~' || c == '.');
        s = s.trim_matches(|c: char| c.is_whitespace() || matches!(c, '—' | '–' | '-' | ':' | ',' | ';' | '='));
    }
    s
}

/// Removes an emptied or dangling parenthetical left behind by kcal removal.
fn tidy_parens(s: &str) -> String {
    let mut out = s.replace("()", "").replace("( )", "");
    while let Some(pos) = out.find(", )") {
        out.replace_range(pos..pos + 3, ")");
    }
    while let Some(pos) = out.find(" )") {
        out.replace_range(pos..pos + 2, ")");
    }
    let opens = out.matches('(').count();
    let closes = out.matches(')').count();
    if opens > closes {
        out.push_str(&")".repeat(opens - closes));
    }
    out
}

/// Splits item text into (name, portion, kcal).
fn parse_item<T: Scalar>(text: &str, warnings: &mut Vec<ParseWarning>) -> (String, PortionSpec<T>, Option<T>) {
    let (body, kcal) = match find_kcal::<T>(text, warnings) {
        Some((range, value)) => {
            let before = text[..range.start].trim_end_matches(|c: char| c.is_whitespace() || c == '~');
            let before = before.strip_suffix("approx.").unwrap_or(before);
            let after = &text[range.end..];
            let inside_paren = before.matches('(').count() > before.matches(')').count();
            let joined = if inside_paren {
                format!("{}{}", before.trim_end_matches([' ', ',', ';']), after)
            } else {
                before.to_owned()
            };
            (tidy_parens(&joined), value)
        }
        None => (text.to_owned(), None),
    };
    let body = trim_separators(&body).to_owned();

    let colon_split = body
        .split_once(": ")
        .filter(|(head, tail)| !head.trim().is_empty() && portion::leading_count::<T>(tail).is_some());
    let (name, portion_text) = if let Some((head, tail)) = colon_split {
        (head.trim().to_owned(), tail.trim().to_owned())
    } else if let Some(open) = last_group_start(&body) {
        let head = body[..open].trim();
        let group = &body[open + 1..body.len() - 1];
        if head.is_empty() {
            (group.to_owned(), group.to_owned())
        } else if portion::leading_count::<T>(head).is_some() {
            (portion::strip_quantity(head).to_owned(), body.clone())
        } else {
            (head.to_owned(), group.to_owned())
        }
    } else if let Some((head, tail)) = body.split_once(": ").or_else(|| body.split_once(" — ")).or_else(|| body.split_once(" – ")) {
        if portion::leading_count::<T>(tail).is_some() || portion::leading_count::<T>(head).is_none() {
            (head.trim().to_owned(), tail.trim().to_owned())
        } else {
            (tail.trim().to_owned(), head.trim().to_owned())
        }
    } else if portion::leading_count::<T>(&body).is_some() {
        (portion::strip_quantity(&body).to_owned(), body.clone())
    } else {
        (body.clone(), String::new())
    };
    let portion = if portion_text.is_empty() { PortionSpec::raw_only("") } else { extract_portion(&portion_text) };
    (trim_separators(&name).to_owned(), portion, kcal)
}

struct PlanBuilder<T> {
    plan: MealPlan<T>,
    current_meal: Option<MealKind>,
    in_totals: bool,
    totals_line: Option<String>,
    recovered: bool,
}

impl<T: Scalar> PlanBuilder<T> {
    fn new(option_index: usize, recovered: bool) -> Self {
        Self { plan: MealPlan::new(option_index), current_meal: None, in_totals: false, totals_line: None, recovered }
    }

    fn is_complete(&self) -> bool {
        MealKind::ALL.iter().all(|k| self.plan.meals.contains_key(k))
    }

    fn last_item(&mut self) -> Option<&mut MealItem<T>> {
        let meal = self.current_meal?;
        self.plan.meals.get_mut(&meal)?.items.last_mut()
    }

    fn absorb_totals(&mut self, line: &str, warnings: &mut Vec<ParseWarning>) -> bool {
        let mut found = false;
        let totals = &mut self.plan.reported_totals;
        if !MACRO_LINE.is_match(line) && totals.calories.is_none() {
            if let Some((_, Some(v))) = find_kcal::<T>(line, warnings) {
                totals.calories = Some(v);
                found = true;
            }
        }
        for caps in MACRO_AFTER.captures_iter(line) {
            found |= set_macro(totals, &caps[1], parse_number(&caps[2], warnings, line));
        }
        for caps in MACRO_BEFORE.captures_iter(line) {
            found |= set_macro(totals, &caps[2], parse_number(&caps[1], warnings, line));
        }
        found
    }

    fn finish(mut self, warnings: &mut Vec<ParseWarning>) -> Option<MealPlan<T>> {
        let idx = self.plan.option_index;
        if self.plan.meals.is_empty() {
            if !self.recovered {
                warnings.push(ParseWarning::EmptyPlanDropped { option_index: idx });
            }
            return None;
        }
        for kind in MealKind::ALL {
            match self.plan.meals.get(&kind) {
                None => warnings.push(ParseWarning::MissingMeal { option_index: idx, meal: kind }),
                Some(meal) => {
                    if meal.reported_kcal.is_none() {
                        warnings.push(ParseWarning::MissingMealKcal { option_index: idx, meal: kind });
                    }
                }
            }
        }
        let implausible = T::from_u32(IMPLAUSIBLE_KCAL).expect("fits");
        for meal in self.plan.meals.values() {
            if let Some(k) = meal.reported_kcal.filter(|k| *k > implausible) {
                warnings.push(ParseWarning::ImplausibleKcal { option_index: idx, value: k.to_decimal_string() });
            }
            for item in &meal.items {
                match item.reported_kcal {
                    None => warnings.push(ParseWarning::MissingItemKcal { option_index: idx, item: item.name.clone() }),
                    Some(k) if k > implausible => warnings
                        .push(ParseWarning::ImplausibleKcal { option_index: idx, value: k.to_decimal_string() }),
                    Some(_) => {}
                }
                if !item.portion.is_resolved() {
                    warnings.push(ParseWarning::UnparsedPortion { option_index: idx, item: item.name.clone() });
                }
            }
        }
        if self.plan.reported_totals.is_empty() {
            if let Some(line) = self.totals_line.take() {
                warnings.push(ParseWarning::UnparsedTotals { option_index: idx, line });
            }
        }
        if !self.plan.reported_totals.has_macros() {
            let missing = self.plan.reported_totals.missing().into_iter().map(str::to_owned).collect();
            warnings.push(ParseWarning::MissingMacroTotals { option_index: idx, missing });
        }
        Some(self.plan)
    }
}

fn set_macro<T: Scalar>(totals: &mut ReportedTotals<T>, key: &str, value: Option<T>) -> bool {
    let Some(value) = value else { return false };
    let slot = match key.to_lowercase().as_str() {
        "fat" => &mut totals.fat,
        "protein" => &mut totals.protein,
        _ => &mut totals.carbohydrate,
    };
    if slot.is_none() {
        *slot = Some(value);
    }
    true
}

fn meal_kind(label: &str) -> MealKind {
    let lower = label.to_lowercase();
    if lower.starts_with("breakfast") {
        MealKind::Breakfast
    } else if lower.starts_with("lunch") {
        MealKind::Lunch
    } else if lower.starts_with("dinner") {
        MealKind::Dinner
    } else {
        MealKind::Snacks
    }
}

fn has_words(text: &str) -> bool {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .any(|w| !FILLER_WORDS.contains(&w.to_lowercase().as_str()))
}

/// Parses every meal plan recognizable in `raw`.
///
/// Returns at most [`MAX_PLANS`] plans. Zero plans is a valid outcome and
/// comes with a [`ParseWarning::NoPlansFound`].
pub fn parse_plans<T: Scalar>(raw: &str) -> (Vec<MealPlan<T>>, Vec<ParseWarning>) {
    let mut warnings = Vec::new();
    let mut plans: Vec<MealPlan<T>> = Vec::new();
    let mut current: Option<PlanBuilder<T>> = None;
    let mut seen_indices = std::collections::BTreeSet::new();
    let mut last_index = 0usize;

    let flush = |builder: Option<PlanBuilder<T>>, plans: &mut Vec<MealPlan<T>>, warnings: &mut Vec<ParseWarning>| {
        if let Some(plan) = builder.and_then(|b| b.finish(warnings)) {
            plans.push(plan);
        }
    };

    for line in raw.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let stripped = strip_markdown(trimmed);
        let bullet = is_bullet(trimmed);
        if has_disclaimer(trimmed) {
            if let Some(b) = current.as_mut() {
                b.plan.disclaimer_present = true;
            }
        }

        if let Some(caps) = PLAN_HEADER.captures(&stripped) {
            let index: usize = caps[1].parse().unwrap_or(last_index + 1);
            flush(current.take(), &mut plans, &mut warnings);
            if !seen_indices.insert(index) {
                warnings.push(ParseWarning::DuplicateOptionIndex { option_index: index });
            }
            last_index = index;
            current = Some(PlanBuilder::new(index, false));
            continue;
        }

        if let Some(b) = current.as_mut() {
            if b.in_totals {
                if TOTALS_FIELD.is_match(&stripped) {
                    b.absorb_totals(&stripped, &mut warnings);
                    continue;
                }
                b.in_totals = false;
            }
        }

        if let Some(caps) = MEAL_HEADER.captures(&stripped) {
            let kind = meal_kind(&caps[1]);
            let is_snack_variant = kind == MealKind::Snacks;
            let needs_new = match &current {
                None => true,
                Some(b) => kind == MealKind::Breakfast && b.plan.meals.contains_key(&kind) && b.is_complete(),
            };
            if needs_new {
                flush(current.take(), &mut plans, &mut warnings);
                last_index += 1;
                seen_indices.insert(last_index);
                warnings.push(ParseWarning::RecoveredHeader { option_index: last_index });
                current = Some(PlanBuilder::new(last_index, true));
            }
            let b = current.as_mut().expect("plan exists");
            let idx = b.plan.option_index;
            if b.plan.meals.contains_key(&kind) && !is_snack_variant {
                warnings.push(ParseWarning::DuplicateMeal { option_index: idx, meal: kind });
            }
            let rest = &stripped[caps[1].len()..];
            let kcal = find_kcal::<T>(rest, &mut warnings).and_then(|(_, v)| v);
            let meal = b.plan.meals.entry(kind).or_default();
            if meal.reported_kcal.is_none() {
                meal.reported_kcal = kcal;
            } else if let (Some(prev), Some(extra)) = (meal.reported_kcal, kcal) {
                if is_snack_variant {
                    meal.reported_kcal = Some(prev + extra);
                }
            }
            b.current_meal = Some(kind);
            b.in_totals = false;
            let inline = rest.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ':' | '-' | '–' | '—' | '='));
            if has_words(inline) && !inline.starts_with('(') {
                let (name, portion, item_kcal) = parse_item::<T>(inline, &mut warnings);
                if !name.is_empty() {
                    meal.items.push(MealItem { name, portion, reported_kcal: item_kcal, recipe: None });
                }
            }
            continue;
        }

        if TOTALS_HEADER.is_match(&stripped) {
            let Some(b) = current.as_mut() else { continue };
            let found = b.absorb_totals(&stripped, &mut warnings);
            if !found {
                b.totals_line.get_or_insert_with(|| stripped.clone());
            }
            b.in_totals = true;
            b.current_meal = None;
            continue;
        }

        let Some(b) = current.as_mut() else { continue };
        let idx = b.plan.option_index;

        if MACRO_LINE.is_match(&stripped) {
            b.absorb_totals(&stripped, &mut warnings);
            continue;
        }

        if let Some(caps) = RECIPE_LINE.captures(&stripped) {
            let text = caps[1].trim().to_owned();
            if let Some(item) = b.last_item() {
                if !text.is_empty() {
                    item.recipe = Some(match item.recipe.take() {
                        Some(prev) => format!("{prev} {text}"),
                        None => text,
                    });
                }
            }
            continue;
        }

        if !bullet {
            if let Some(caps) = OTHER_MEAL_HEADER.captures(&stripped) {
                let label = caps[1].trim().to_owned();
                let last_word = label.rsplit(' ').next().unwrap_or_default().to_lowercase();
                if OTHER_MEAL_WORDS.contains(&last_word.as_str()) {
                    warnings.push(ParseWarning::UnlabeledMeal { option_index: idx, label });
                    let kcal = find_kcal::<T>(&stripped, &mut warnings).and_then(|(_, v)| v);
                    let meal = b.plan.meals.entry(MealKind::Snacks).or_default();
                    meal.reported_kcal = match (meal.reported_kcal, kcal) {
                        (Some(a), Some(k)) => Some(a + k),
                        (a, k) => a.or(k),
                    };
                    b.current_meal = Some(MealKind::Snacks);
                    continue;
                }
            }
        }

        let item_like = bullet || (b.current_meal.is_some() && KCAL_AFTER.is_match(&stripped) && !has_disclaimer(&stripped));
        if item_like {
            let text = NUMBERED.replace(&stripped, "").into_owned();
            let Some(meal_kind) = b.current_meal else {
                warnings.push(ParseWarning::OrphanItem { option_index: idx, line: stripped.clone() });
                continue;
            };
            let (name, portion, kcal) = parse_item::<T>(&text, &mut warnings);
            if name.is_empty() {
                continue;
            }
            b.plan
                .meals
                .entry(meal_kind)
                .or_default()
                .items
                .push(MealItem { name, portion, reported_kcal: kcal, recipe: None });
        }
    }
    flush(current.take(), &mut plans, &mut warnings);

    if plans.len() > REQUESTED_PLANS {
        warnings.push(ParseWarning::ExtraPlans { found: plans.len() });
    }
    if plans.len() > MAX_PLANS {
        warnings.push(ParseWarning::PlanCapExceeded { found: plans.len() });
        plans.truncate(MAX_PLANS);
    }
    if plans.is_empty() {
        warnings.push(ParseWarning::NoPlansFound);
    }
    (plans, warnings)
}
