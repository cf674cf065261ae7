//! Grounds parsed plans against the catalog and computes calorie metrics.
//!
//! Two errors are measured. The self-consistency error compares what a model
//! reported for each item against the catalog value for the same portion,
//! averaged over the plans it produced. The target error compares the mean
//! plan total for an input against that input's calorie target, averaged over
//! the inputs a model answered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{scale_nutrients, Catalog, MatchResult};
use crate::parser::{CompletenessFlags, MealItem, MealKind, MealPlan};
use crate::scalar::{abs, mean, sum, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no plans to evaluate")]
    NoPlans,
    #[error("no plan has the values required by {0:?} mode")]
    MissingValues(TotalMode),
    #[error("every input failed; nothing to average")]
    AllInputsFailed,
    #[error("{plans} plans but {grounded} grounded plans")]
    LengthMismatch { plans: usize, grounded: usize },
}

/// How a plan's actual total is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalMode {
    /// Sum of per-item kcal as reported by the model.
    #[default]
    ItemSum,
    /// The plan's own `Total:` line.
    ReportedTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedItem<T = f64> {
    pub meal: MealKind,
    pub item: MealItem<T>,
    pub matched: MatchResult<T>,
    /// Catalog kcal for the stated portion; `None` when unmatched or the
    /// portion could not be resolved.
    pub usda_kcal: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedPlan<T = f64> {
    pub option_index: usize,
    pub items: Vec<GroundedItem<T>>,
    pub usda_total_kcal: T,
    pub unmatched_count: usize,
    pub coverage: T,
}

impl<T: Scalar> GroundedPlan<T> {
    /// Sum of reported item kcal. Items without a reported value are taken at
    /// their grounded value, so they add nothing to the error.
    pub fn reported_total_kcal(&self) -> T {
        sum(self.items.iter().map(|g| g.item.reported_kcal.or(g.usda_kcal).unwrap_or_else(T::zero)))
    }
}

/// Matches every item against the catalog and totals the grounded kcal.
///
/// Items that cannot be grounded fall back to their reported kcal (or zero)
/// so the plan total stays comparable; `coverage` says how much was verified.
pub fn ground_plan<T: Scalar>(plan: &MealPlan<T>, catalog: &Catalog<T>, threshold: T) -> GroundedPlan<T> {
    let items: Vec<GroundedItem<T>> = plan
        .meals
        .iter()
        .flat_map(|(kind, meal)| meal.items.iter().map(move |item| (*kind, item)))
        .map(|(meal, item)| {
            let matched = catalog.best_match(&item.name, threshold);
            let usda_kcal = matched
                .matched_id
                .as_deref()
                .and_then(|id| catalog.get(id))
                .and_then(|record| scale_nutrients(record, &item.portion).ok())
                .map(|n| n.calories);
            GroundedItem { meal, item: item.clone(), matched, usda_kcal }
        })
        .collect();
    let grounded = items.iter().filter(|g| g.usda_kcal.is_some()).count();
    let unmatched_count = items.len() - grounded;
    let usda_total_kcal = sum(items.iter().map(|g| g.usda_kcal.or(g.item.reported_kcal).unwrap_or_else(T::zero)));
    let coverage = if items.is_empty() {
        T::one()
    } else {
        <T as Scalar>::from_usize(grounded) / <T as Scalar>::from_usize(items.len())
    };
    GroundedPlan { option_index: plan.option_index, items, usda_total_kcal, unmatched_count, coverage }
}

/// Mean over plans of |reported total − grounded total|, using the number of
/// plans actually produced as the divisor.
pub fn eq1_mae<T: Scalar>(grounded: &[GroundedPlan<T>]) -> Result<T, MetricError> {
    let errors: Vec<T> = grounded.iter().map(|g| abs(g.reported_total_kcal() - g.usda_total_kcal)).collect();
    mean(&errors).ok_or(MetricError::NoPlans)
}

/// The same metric from bare per-plan totals.
pub fn eq1_from_totals<T: Scalar>(reported: &[T], usda: &[T]) -> Result<T, MetricError> {
    if reported.len() != usda.len() {
        return Err(MetricError::LengthMismatch { plans: reported.len(), grounded: usda.len() });
    }
    let errors: Vec<T> = reported.iter().zip(usda).map(|(r, u)| abs(*r - *u)).collect();
    mean(&errors).ok_or(MetricError::NoPlans)
}

/// One plan's actual total under `mode`, or `None` if a needed value is missing.
///
/// In item-sum mode a meal whose items are not all annotated falls back to
/// the meal's own kcal line.
pub fn plan_total<T: Scalar>(plan: &MealPlan<T>, mode: TotalMode) -> Option<T> {
    match mode {
        TotalMode::ReportedTotal => plan.reported_totals.calories,
        TotalMode::ItemSum => {
            if plan.meals.is_empty() {
                return None;
            }
            let mut total = T::zero();
            for meal in plan.meals.values() {
                let items: Option<Vec<T>> = meal.items.iter().map(|i| i.reported_kcal).collect();
                match items {
                    Some(v) if !v.is_empty() => total = total + sum(v),
                    _ => total = total + meal.reported_kcal?,
                }
            }
            Some(total)
        }
    }
}

/// Mean of plan totals. Plans missing the needed values are skipped; the
/// call fails only when none is usable.
pub fn mean_plan_total<T: Scalar>(plans: &[MealPlan<T>], mode: TotalMode) -> Result<T, MetricError> {
    if plans.is_empty() {
        return Err(MetricError::NoPlans);
    }
    let totals: Vec<T> = plans.iter().filter_map(|p| plan_total(p, mode)).collect();
    mean(&totals).ok_or(MetricError::MissingValues(mode))
}

/// Item sum disagreeing with the plan's own total line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalDiscrepancy<T = f64> {
    pub option_index: usize,
    pub item_sum: T,
    pub reported_total: T,
    pub delta: T,
}

pub fn total_discrepancies<T: Scalar>(plans: &[MealPlan<T>]) -> Vec<TotalDiscrepancy<T>> {
    plans
        .iter()
        .filter_map(|p| {
            let item_sum = plan_total(p, TotalMode::ItemSum)?;
            let reported_total = plan_total(p, TotalMode::ReportedTotal)?;
            let delta = abs(item_sum - reported_total);
            (delta != T::zero()).then_some(TotalDiscrepancy { option_index: p.option_index, item_sum, reported_total, delta })
        })
        .collect()
}

/// One (model, input) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEvaluation<T = f64> {
    pub input_id: String,
    pub model_id: String,
    pub eq1_error: Option<T>,
    pub mean_plan_total: Option<T>,
    pub target: T,
    /// Mean grounding coverage over plans; absent when no plan was found.
    pub coverage: Option<T>,
    pub completeness: CompletenessFlags,
}

/// Builds a cell from parsed and grounded plans.
pub fn evaluate_cell<T: Scalar>(
    model_id: &str,
    input_id: &str,
    target: T,
    plans: &[MealPlan<T>],
    grounded: &[GroundedPlan<T>],
    completeness: CompletenessFlags,
    mode: TotalMode,
) -> InputEvaluation<T> {
    let coverages: Vec<T> = grounded.iter().map(|g| g.coverage).collect();
    InputEvaluation {
        input_id: input_id.to_owned(),
        model_id: model_id.to_owned(),
        eq1_error: eq1_mae(grounded).ok(),
        mean_plan_total: mean_plan_total(plans, mode).ok(),
        target,
        coverage: mean(&coverages),
        completeness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetError<T = f64> {
    pub mae: T,
    /// Mean of per-input absolute percentage errors.
    pub mae_pct: T,
    pub n_used: usize,
}

/// Mean absolute error of mean plan totals against targets over the inputs a
/// model answered.
pub fn eq2_mae<T: Scalar>(evals: &[InputEvaluation<T>]) -> Result<TargetError<T>, MetricError> {
    let pairs: Vec<(T, T)> = evals.iter().filter_map(|e| e.mean_plan_total.map(|m| (m, e.target))).collect();
    eq2_from_pairs(&pairs)
}

/// `(mean_plan_total, target)` pairs for the answered inputs.
pub fn eq2_from_pairs<T: Scalar>(pairs: &[(T, T)]) -> Result<TargetError<T>, MetricError> {
    let hundred = <T as Scalar>::from_usize(100);
    let abs_err: Vec<T> = pairs.iter().map(|(m, t)| abs(*m - *t)).collect();
    let pct: Vec<T> = pairs.iter().zip(&abs_err).map(|((_, t), e)| *e / *t * hundred).collect();
    match (mean(&abs_err), mean(&pct)) {
        (Some(mae), Some(mae_pct)) => Ok(TargetError { mae, mae_pct, n_used: pairs.len() }),
        _ => Err(MetricError::AllInputsFailed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::FoodRecord;
    use crate::nutrients::NutrientVector;
    use crate::parser::{parse_plans, Meal, PortionSpec};
    use crate::scalar::Exact;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn item<T: Scalar>(name: &str, grams: Option<i64>, kcal: Option<i64>) -> MealItem<T> {
        let grams = grams.map(|g| T::from_i64(g).unwrap());
        MealItem {
            name: name.into(),
            portion: PortionSpec { grams, count: None, raw: String::new() },
            reported_kcal: kcal.map(|k| T::from_i64(k).unwrap()),
            recipe: None,
        }
    }

    fn plan_with<T: Scalar>(index: usize, meals: Vec<(MealKind, Vec<MealItem<T>>, Option<i64>)>) -> MealPlan<T> {
        let mut plan = MealPlan::new(index);
        for (kind, items, kcal) in meals {
            plan.meals.insert(kind, Meal { items, reported_kcal: kcal.map(|k| T::from_i64(k).unwrap()) });
        }
        plan
    }

    fn catalog<T: Scalar>() -> Catalog<T> {
        let n = |k: i64| NutrientVector::new(T::from_i64(k).unwrap(), T::zero(), T::zero(), T::zero(), T::zero());
        let hundred = T::from_i64(100).unwrap();
        Catalog::from_records(
            vec![
                FoodRecord::new("1", "Oatmeal", "100 g", hundred, n(200)),
                FoodRecord::new("2", "Grilled chicken", "100 g", hundred, n(165)),
                FoodRecord::new("3", "Brown rice", "100 g", hundred, n(110)),
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn eq1_hand_values() {
        assert_eq!(eq1_from_totals(&[1600.0, 1500.0, 1450.0], &[1550.0, 1480.0, 1500.0]), Ok(40.0));
        assert_eq!(eq1_from_totals(&[1000.0], &[880.0]), Ok(120.0));
        assert_eq!(eq1_from_totals(&[1.0, 2.0], &[1.0, 2.0]), Ok(0.0));
        assert_eq!(eq1_from_totals::<f64>(&[], &[]), Err(MetricError::NoPlans));
        assert!(matches!(eq1_from_totals(&[1.0], &[]), Err(MetricError::LengthMismatch { .. })));
        let exact: Vec<Exact> = [1600, 1500, 1450].map(Ratio::from_integer).to_vec();
        let usda: Vec<Exact> = [1550, 1480, 1500].map(Ratio::from_integer).to_vec();
        assert_eq!(eq1_from_totals(&exact, &usda), Ok(Ratio::from_integer(40)));
    }

    #[test]
    fn eq2_hand_values() {
        let r = eq2_from_pairs::<f64>(&[(2000.0, 2000.0), (1700.0, 1500.0)]).unwrap();
        assert_eq!(r.mae, 100.0);
        assert!((r.mae_pct - 6.667).abs() < 1e-3);
        assert_eq!(r.n_used, 2);
        let exact = eq2_from_pairs(&[
            (Ratio::from_integer(2000), Ratio::from_integer(2000)),
            (Ratio::from_integer(1700), Ratio::from_integer(1500)),
        ])
        .unwrap();
        assert_eq!(exact.mae_pct, Ratio::new(20, 3));
        assert_eq!(eq2_from_pairs::<f64>(&[(5.0, 5.0)]).unwrap().mae, 0.0);
        assert_eq!(eq2_from_pairs::<f64>(&[]), Err(MetricError::AllInputsFailed));
    }

    #[test]
    fn eq2_skips_failed_inputs() {
        let cell = |m: Option<f64>, t: f64| InputEvaluation {
            input_id: "x".into(),
            model_id: "m".into(),
            eq1_error: None,
            mean_plan_total: m,
            target: t,
            coverage: None,
            completeness: CompletenessFlags::default(),
        };
        let r = eq2_mae(&[cell(Some(2000.0), 2000.0), cell(None, 3000.0), cell(Some(1700.0), 1500.0)]).unwrap();
        assert_eq!((r.mae, r.n_used), (100.0, 2));
        assert_eq!(eq2_mae(&[cell(None, 1.0)]), Err(MetricError::AllInputsFailed));
    }

    #[test]
    fn averaging_before_abs() {
        let plans: Vec<MealPlan<f64>> = [1600, 1500, 1400]
            .iter()
            .enumerate()
            .map(|(i, k)| plan_with(i + 1, vec![(MealKind::Lunch, vec![item("x", None, Some(*k))], Some(*k))]))
            .collect();
        let m = mean_plan_total(&plans, TotalMode::ItemSum).unwrap();
        assert_eq!(m, 1500.0);
        assert_eq!(eq2_from_pairs(&[(m, 1500.0)]).unwrap().mae, 0.0);
        assert_eq!(mean_plan_total(&plans[..1], TotalMode::ItemSum), Ok(1600.0));
        assert_eq!(mean_plan_total::<f64>(&[], TotalMode::ItemSum), Err(MetricError::NoPlans));
        assert_eq!(
            mean_plan_total(&plans, TotalMode::ReportedTotal),
            Err(MetricError::MissingValues(TotalMode::ReportedTotal))
        );
    }

    #[test]
    fn item_sum_falls_back_to_meal_line() {
        let plan = plan_with::<f64>(
            1,
            vec![
                (MealKind::Breakfast, vec![item("a", None, Some(300)), item("b", None, None)], Some(450)),
                (MealKind::Lunch, vec![item("c", None, Some(600))], Some(999)),
            ],
        );
        assert_eq!(plan_total(&plan, TotalMode::ItemSum), Some(1050.0));
        let bare = plan_with::<f64>(1, vec![(MealKind::Lunch, vec![item("c", None, None)], None)]);
        assert_eq!(plan_total(&bare, TotalMode::ItemSum), None);
    }

    #[test]
    fn discrepancy_between_modes() {
        let raw = "Meal Plan 1:\nBreakfast: 400 kcal\n- Oatmeal (200g) — 400 kcal\nLunch: 500 kcal\n- Grilled chicken (300g) — 500 kcal\n\
                   Total: 1000 kcal, Fat: 30 g, Protein: 80 g, Carbohydrate: 100 g\n";
        let (plans, _) = parse_plans::<f64>(raw);
        assert_eq!(mean_plan_total(&plans, TotalMode::ItemSum), Ok(900.0));
        assert_eq!(mean_plan_total(&plans, TotalMode::ReportedTotal), Ok(1000.0));
        let d = total_discrepancies(&plans);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].delta, 100.0);
    }

    #[test]
    fn grounding_with_fallback() {
        let cat = catalog::<Exact>();
        let plan = plan_with::<Exact>(
            1,
            vec![
                (MealKind::Breakfast, vec![item("Oatmeal", Some(150), Some(290))], None),
                (MealKind::Lunch, vec![item("Grilled chicken", Some(200), Some(340)), item("Mystery stew", Some(300), Some(200))], None),
                (MealKind::Dinner, vec![item("Brown rice", Some(140), Some(154))], None),
            ],
        );
        let g = ground_plan(&plan, &cat, Ratio::new(3, 5));
        // 300 + 330 + 154 grounded, 200 carried from the report.
        assert_eq!(g.usda_total_kcal, Ratio::from_integer(984));
        assert_eq!(g.coverage, Ratio::new(3, 4));
        assert_eq!(g.unmatched_count, 1);
        assert_eq!(g.reported_total_kcal(), Ratio::from_integer(984));
        assert_eq!(eq1_mae(&[g]), Ok(Ratio::from_integer(0)));
    }

    #[test]
    fn grounding_fixture_totals_1000() {
        let cat = catalog::<f64>();
        let plan = plan_with::<f64>(
            1,
            vec![(
                MealKind::Lunch,
                vec![
                    item("Oatmeal", Some(125), Some(260)),
                    item("Grilled chicken", Some(200), Some(330)),
                    item("Brown rice", Some(200), Some(225)),
                    item("Dragonfruit smoothie", Some(300), Some(200)),
                ],
                None,
            )],
        );
        let g = ground_plan(&plan, &cat, 0.6);
        let three_matched: f64 = g.items.iter().filter_map(|i| i.usda_kcal).sum();
        assert_eq!(three_matched, 800.0);
        assert_eq!(g.usda_total_kcal, 1000.0);
        assert_eq!(g.coverage, 0.75);
        assert_eq!(eq1_mae(&[g]), Ok(15.0));
    }

    #[test]
    fn empty_plan_is_vacuously_covered() {
        let g = ground_plan(&MealPlan::<f64>::new(1), &catalog(), 0.6);
        assert_eq!((g.usda_total_kcal, g.coverage), (0.0, 1.0));
        assert_eq!(eq1_mae::<f64>(&[]), Err(MetricError::NoPlans));
    }

    #[test]
    fn unresolved_portion_is_not_grounded() {
        let cat = catalog::<f64>();
        let plan = plan_with::<f64>(1, vec![(MealKind::Lunch, vec![item("Oatmeal", None, Some(250))], None)]);
        let g = ground_plan(&plan, &cat, 0.6);
        assert_eq!(g.items[0].matched.matched_id.as_deref(), Some("1"));
        assert_eq!(g.items[0].usda_kcal, None);
        assert_eq!(g.usda_total_kcal, 250.0);
        assert_eq!(g.coverage, 0.0);
    }

    proptest! {
        #[test]
        fn homogeneity(
            cells in prop::collection::vec((1i64..5000, 1i64..5000, prop::sample::select(vec![1500i64, 2000, 2500, 3000])), 1..10),
            lambda in 1i64..50,
        ) {
            let to = |v: i64| Ratio::from_integer(v);
            let l = to(lambda);
            let rep: Vec<Exact> = cells.iter().map(|c| to(c.0)).collect();
            let usda: Vec<Exact> = cells.iter().map(|c| to(c.1)).collect();
            let e1 = eq1_from_totals(&rep, &usda).unwrap();
            let scaled_rep: Vec<Exact> = rep.iter().map(|v| *v * l).collect();
            let scaled_usda: Vec<Exact> = usda.iter().map(|v| *v * l).collect();
            prop_assert_eq!(eq1_from_totals(&scaled_rep, &scaled_usda).unwrap(), e1 * l);

            let pairs: Vec<(Exact, Exact)> = cells.iter().map(|c| (to(c.0), to(c.2))).collect();
            let scaled: Vec<(Exact, Exact)> = pairs.iter().map(|(m, t)| (*m * l, *t * l)).collect();
            let a = eq2_from_pairs(&pairs).unwrap();
            let b = eq2_from_pairs(&scaled).unwrap();
            prop_assert_eq!(b.mae, a.mae * l);
            prop_assert_eq!(b.mae_pct, a.mae_pct);
            prop_assert!(a.mae >= to(0) && e1 >= to(0));
        }

        #[test]
        fn permutation_invariance(
            cells in prop::collection::vec((1i64..5000, prop::sample::select(vec![1500i64, 1750, 2000, 3500])), 1..10),
            rot in 0usize..10,
        ) {
            let to = |v: i64| Ratio::from_integer(v);
            let pairs: Vec<(Exact, Exact)> = cells.iter().map(|c| (to(c.0), to(c.1))).collect();
            let mut rotated = pairs.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            prop_assert_eq!(eq2_from_pairs(&pairs).unwrap(), eq2_from_pairs(&rotated).unwrap());
            let (r, u): (Vec<Exact>, Vec<Exact>) = rotated.iter().copied().unzip();
            let (r0, u0): (Vec<Exact>, Vec<Exact>) = pairs.iter().copied().unzip();
            prop_assert_eq!(eq1_from_totals(&r, &u).unwrap(), eq1_from_totals(&r0, &u0).unwrap());
        }
    }
}
