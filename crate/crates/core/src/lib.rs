//! Meal-plan generation harness: USDA-grounded profiles, structured prompts,
//! multi-provider generation, tolerant plan parsing and calorie-accuracy
//! evaluation.
//!
//! Numeric code is generic over [`Scalar`]; the pipeline itself runs on `f64`
//! through the aliases below, and [`Exact`] rationals are available wherever
//! a total must be checked without rounding.

pub mod catalog;
pub mod demo;
pub mod gateway;
pub mod nutrients;
pub mod parser;
pub mod pipeline;
pub mod profile;
pub mod prompt;
pub mod reconcile;
pub mod report;
pub mod scalar;

pub use scalar::{Exact, Scalar};

pub type Nutrients = nutrients::NutrientVector<f64>;
pub type ExactNutrients = nutrients::NutrientVector<Exact>;
pub type Catalog = catalog::Catalog<f64>;
pub type FoodRecord = catalog::FoodRecord<f64>;
pub type MatchResult = catalog::MatchResult<f64>;
pub type PortionSpec = parser::PortionSpec<f64>;
pub type MealItem = parser::MealItem<f64>;
pub type MealPlan = parser::MealPlan<f64>;
pub type ConsumptionProfile = profile::ConsumptionProfile<f64>;
pub type NutritionTargets = profile::NutritionTargets<f64>;
pub type GroundedPlan = reconcile::GroundedPlan<f64>;
pub type InputEvaluation = reconcile::InputEvaluation<f64>;
