//! Canonical plain-text serialization of meal plans.
//!
//! This is the grammar the prompt asks for and the format of the few-shot
//! examples; [`super::parse_plans`] reads it back without warnings.

use std::fmt::Write;

use super::{MealKind, MealPlan};
use crate::scalar::Scalar;

const DISCLAIMER_LINE: &str = "Note: nutritional values are approximate and may vary with portion sizes.";

pub fn emit_plan<T: Scalar>(plan: &MealPlan<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Meal Plan {}:", plan.option_index);
    for kind in MealKind::ALL {
        let Some(meal) = plan.meals.get(&kind) else { continue };
        match meal.reported_kcal {
            Some(k) => {
                let _ = writeln!(out, "{}: {} kcal", kind.label(), k.to_decimal_string());
            }
            None => {
                let _ = writeln!(out, "{}:", kind.label());
            }
        }
        for item in &meal.items {
            let _ = write!(out, "- {}", item.name);
            if !item.portion.raw.is_empty() {
                let _ = write!(out, " ({})", item.portion.raw);
            }
            if let Some(k) = item.reported_kcal {
                let _ = write!(out, " — {} kcal", k.to_decimal_string());
            }
            out.push('\n');
            if let Some(recipe) = &item.recipe {
                let _ = writeln!(out, "  Recipe: {recipe}");
            }
        }
    }
    let totals = &plan.reported_totals;
    let mut parts = Vec::new();
    if let Some(c) = totals.calories {
        parts.push(format!("{} kcal", c.to_decimal_string()));
    }
    for (label, value) in [("Fat", totals.fat), ("Protein", totals.protein), ("Carbohydrate", totals.carbohydrate)] {
        if let Some(v) = value {
            parts.push(format!("{label}: {} g", v.to_decimal_string()));
        }
    }
    if !parts.is_empty() {
        let _ = writeln!(out, "Total: {}", parts.join(", "));
    }
    if plan.disclaimer_present {
        let _ = writeln!(out, "{DISCLAIMER_LINE}");
    }
    out
}

pub fn emit_plans<T: Scalar>(plans: &[MealPlan<T>]) -> String {
    plans.iter().map(emit_plan).collect::<Vec<_>>().join("\n")
}
