//! Structural grading of a parsed response.

use serde::{Deserialize, Serialize};

use super::{MealPlan, ParseWarning, REQUESTED_PLANS};
use crate::scalar::Scalar;

/// Case-insensitive phrases that count as a nutrition disclaimer.
pub const DISCLAIMER_PHRASES: [&str; 3] = ["may vary", "approximate", "differ slightly"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CompletenessFlags {
    pub plans_found: usize,
    pub has_three_options: bool,
    pub all_meals_present: bool,
    pub per_meal_kcal_present: bool,
    pub macros_present: bool,
    pub recipes_present: bool,
    pub disclaimer_present: bool,
}

impl CompletenessFlags {
    /// A response that produced no plan at all.
    pub fn failed(&self) -> bool {
        self.plans_found == 0
    }
}

/// Grades `plans` (parsed from `raw`). Every flag except `plans_found` is
/// false when no plan was found.
pub fn grade_completeness<T: Scalar>(plans: &[MealPlan<T>], _warnings: &[ParseWarning], raw: &str) -> CompletenessFlags {
    let found = !plans.is_empty();
    let every = |pred: &dyn Fn(&MealPlan<T>) -> bool| found && plans.iter().all(pred);
    let lower = raw.to_lowercase();
    CompletenessFlags {
        plans_found: plans.len(),
        has_three_options: plans.len() == REQUESTED_PLANS,
        all_meals_present: every(&|p| p.has_all_meals()),
        per_meal_kcal_present: every(&|p| !p.meals.is_empty() && p.meals.values().all(|m| m.reported_kcal.is_some())),
        macros_present: every(&|p| p.reported_totals.has_macros()),
        recipes_present: every(&|p| p.items().next().is_some() && p.items().all(|i| i.recipe.is_some())),
        disclaimer_present: found && DISCLAIMER_PHRASES.iter().any(|phrase| lower.contains(phrase)),
    }
}
