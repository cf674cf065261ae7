//! Flat per-cell and per-item dumps, kept at full precision so metrics can
//! be recomputed independently of the pipeline.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ReportError, Table2Row};
use crate::reconcile::{GroundedPlan, InputEvaluation};

pub const METRICS_HEADER: &str = "run_id,model_id,input_id,eq1_error,mean_plan_total,target,coverage,plans_found";
pub const SUMMARY_HEADER: &str = "model_id,mae,mae_pct,n_inputs_used";
pub const ITEMS_HEADER: &str = "model_id,input_id,option_index,meal,item_index,name,reported_kcal,usda_kcal,matched_id,match_score";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub model_id: String,
    pub input_id: String,
    pub eq1_error: Option<f64>,
    pub mean_plan_total: Option<f64>,
    pub target: f64,
    pub coverage: Option<f64>,
    pub plans_found: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRow {
    pub model_id: String,
    pub input_id: String,
    pub option_index: usize,
    pub meal: String,
    pub item_index: usize,
    pub name: String,
    pub reported_kcal: Option<f64>,
    pub usda_kcal: Option<f64>,
    pub matched_id: Option<String>,
    pub match_score: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    model_id: &'a str,
    mae: Option<f64>,
    mae_pct: Option<f64>,
    n_inputs_used: usize,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ReportError {
    ReportError::IoFailure { path: path.display().to_string(), message: e.to_string() }
}

fn write_rows<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut any = false;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
        any = true;
    }
    if !any {
        return Err(io_err(path, "no rows to write"));
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_metrics_csv(path: &Path, run_id: &str, evals: &[InputEvaluation]) -> Result<(), ReportError> {
    write_rows(
        path,
        evals.iter().map(|e| MetricsRow {
            run_id: run_id.to_owned(),
            model_id: e.model_id.clone(),
            input_id: e.input_id.clone(),
            eq1_error: e.eq1_error,
            mean_plan_total: e.mean_plan_total,
            target: e.target,
            coverage: e.coverage,
            plans_found: e.completeness.plans_found,
        }),
    )
}

pub fn read_metrics_csv(reader: impl Read) -> Result<Vec<MetricsRow>, csv::Error> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

/// Unrounded table2 values.
pub fn write_summary_csv(path: &Path, rows: &[Table2Row]) -> Result<(), ReportError> {
    write_rows(
        path,
        rows.iter().map(|r| SummaryRow { model_id: &r.model_id, mae: r.mae, mae_pct: r.mae_pct, n_inputs_used: r.n_used }),
    )
}

/// One row per grounded item, for every (model, input, plan).
pub fn write_items_csv<'a>(
    path: &Path,
    cells: impl IntoIterator<Item = (&'a str, &'a str, &'a [GroundedPlan])>,
) -> Result<(), ReportError> {
    let rows = cells.into_iter().flat_map(|(model, input, plans)| {
        plans.iter().flat_map(move |p| {
            p.items.iter().enumerate().map(move |(k, g)| ItemRow {
                model_id: model.to_owned(),
                input_id: input.to_owned(),
                option_index: p.option_index,
                meal: g.meal.label().to_owned(),
                item_index: k,
                name: g.item.name.clone(),
                reported_kcal: g.item.reported_kcal,
                usda_kcal: g.usda_kcal,
                matched_id: g.matched.matched_id.clone(),
                match_score: g.matched.score,
            })
        })
    });
    // Header written by hand so an empty grid still yields a valid file.
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(ITEMS_HEADER.split(',')).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}
