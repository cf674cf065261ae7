//! Tables and figure data assembled from per-cell evaluations.

mod flat;
mod render;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::gateway::GenerationRecord;
use crate::reconcile::{eq2_mae, InputEvaluation};

pub use flat::{read_metrics_csv, write_items_csv, write_metrics_csv, write_summary_csv, ItemRow, MetricsRow, ITEMS_HEADER, METRICS_HEADER, SUMMARY_HEADER};
pub use render::{
    argmin_set, fig3_csv, fmt2, table1_csv, table1_markdown, table2_csv, table2_markdown, timing_csv, FAILED_CELL, FIG3_KEY_COLUMNS,
    TABLE2_COLUMNS, TIMING_COLUMNS,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("evaluation grid is missing {} cells, first {:?}", .0.len(), .0.first())]
    GridIncomplete(Vec<(String, String)>),
    #[error("writing {path}: {message}")]
    IoFailure { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub model_id: String,
    /// One cell per input; `None` where the model produced no plan.
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub model_id: String,
    /// `None` when every input failed.
    pub mae: Option<f64>,
    pub mae_pct: Option<f64>,
    pub n_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub model_id: String,
    pub total_ms: u64,
    pub per_request_ms: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    pub input_id: String,
    pub target: f64,
    /// Mean plan total per model, in manifest order.
    pub totals: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub run_id: String,
    pub models: Vec<String>,
    pub inputs: Vec<String>,
    pub table1: Vec<Table1Row>,
    pub table2: Vec<Table2Row>,
    pub timing: Vec<TimingRow>,
    pub fig3: Vec<Fig3Row>,
    pub metadata: Map<String, Value>,
}

/// Settings every report records so its numbers can be interpreted.
pub fn metric_definitions() -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("eq1_divisor".into(), "number of plans the model actually produced".into());
    m.insert("eq2_inputs".into(), "inputs with at least one usable plan; failed inputs are excluded".into());
    m.insert("mae_pct".into(), "mean over used inputs of |mean_plan_total - target| / target * 100".into());
    m.insert("ungrounded_items".into(), "items without a catalog match fall back to their reported kcal".into());
    m.insert("number_format".into(), "2 decimals".into());
    m
}

/// Assembles the report. `models` and `inputs` fix row and column order and
/// every (model, input) pair must have exactly one evaluation.
pub fn build_report(
    run_id: &str,
    evals: &[InputEvaluation],
    records: &[GenerationRecord],
    models: &[String],
    inputs: &[String],
    settings: Map<String, Value>,
) -> Result<EvaluationReport, ReportError> {
    let by_key: HashMap<(&str, &str), &InputEvaluation> =
        evals.iter().map(|e| ((e.model_id.as_str(), e.input_id.as_str()), e)).collect();
    let missing: Vec<(String, String)> = models
        .iter()
        .flat_map(|m| inputs.iter().map(move |i| (m.clone(), i.clone())))
        .filter(|(m, i)| !by_key.contains_key(&(m.as_str(), i.as_str())))
        .collect();
    if !missing.is_empty() {
        return Err(ReportError::GridIncomplete(missing));
    }
    let cell = |m: &str, i: &str| by_key[&(m, i)];

    let table1 = models
        .iter()
        .map(|m| Table1Row {
            model_id: m.clone(),
            cells: inputs
                .iter()
                .map(|i| {
                    let e = cell(m, i);
                    if e.completeness.failed() { None } else { e.eq1_error }
                })
                .collect(),
        })
        .collect();

    let table2 = models
        .iter()
        .map(|m| {
            let row: Vec<InputEvaluation> = inputs.iter().map(|i| cell(m, i).clone()).collect();
            match eq2_mae(&row) {
                Ok(t) => Table2Row { model_id: m.clone(), mae: Some(t.mae), mae_pct: Some(t.mae_pct), n_used: t.n_used },
                Err(_) => Table2Row { model_id: m.clone(), mae: None, mae_pct: None, n_used: 0 },
            }
        })
        .collect();

    let timing = models
        .iter()
        .map(|m| {
            let per_request_ms: Vec<u64> = inputs
                .iter()
                .filter_map(|i| records.iter().find(|r| &r.model_id == m && &r.input_id == i))
                .map(|r| r.latency_ms)
                .collect();
            TimingRow { model_id: m.clone(), total_ms: per_request_ms.iter().sum(), per_request_ms }
        })
        .collect();

    let fig3 = inputs
        .iter()
        .map(|i| Fig3Row {
            input_id: i.clone(),
            target: cell(&models[0], i).target,
            totals: models.iter().map(|m| cell(m, i).mean_plan_total).collect(),
        })
        .collect();

    let mut metadata = metric_definitions();
    metadata.extend(settings);
    metadata.insert("run_id".into(), run_id.into());

    Ok(EvaluationReport {
        run_id: run_id.to_owned(),
        models: models.to_vec(),
        inputs: inputs.to_vec(),
        table1,
        table2,
        timing,
        fig3,
        metadata,
    })
}

fn write(path: PathBuf, body: &str, out: &mut Vec<PathBuf>) -> Result<(), ReportError> {
    std::fs::write(&path, body).map_err(|e| ReportError::IoFailure { path: path.display().to_string(), message: e.to_string() })?;
    out.push(path);
    Ok(())
}

/// Writes one file per table and format into `dir`, plus `metadata.json`.
/// Returns the written paths in a fixed order.
pub fn emit(report: &EvaluationReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| ReportError::IoFailure { path: dir.display().to_string(), message: e.to_string() })?;
    let mut out = Vec::new();
    if formats.contains(&Format::Csv) {
        write(dir.join("table1.csv"), &table1_csv(report), &mut out)?;
        write(dir.join("table2.csv"), &table2_csv(&report.table2), &mut out)?;
        write(dir.join("timing.csv"), &timing_csv(&report.timing), &mut out)?;
        write(dir.join("fig3.csv"), &fig3_csv(report), &mut out)?;
    }
    if formats.contains(&Format::Markdown) {
        write(dir.join("table1.md"), &table1_markdown(report), &mut out)?;
        write(dir.join("table2.md"), &table2_markdown(&report.table2), &mut out)?;
    }
    let meta = serde_json::to_string_pretty(&report.metadata).expect("metadata serializes") + "\n";
    write(dir.join("metadata.json"), &meta, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::GenerationStatus;
    use crate::parser::CompletenessFlags;

    fn eval(model: &str, input: &str, eq1: Option<f64>, mean: Option<f64>, target: f64) -> InputEvaluation {
        InputEvaluation {
            input_id: input.into(),
            model_id: model.into(),
            eq1_error: eq1,
            mean_plan_total: mean,
            target,
            coverage: eq1.map(|_| 1.0),
            completeness: CompletenessFlags { plans_found: usize::from(eq1.is_some()) * 3, ..Default::default() },
        }
    }

    fn record(model: &str, input: &str, ms: u64) -> GenerationRecord {
        GenerationRecord {
            input_id: input.into(),
            model_id: model.into(),
            raw_text: String::new(),
            latency_ms: ms,
            attempts: 1,
            status: GenerationStatus::Ok,
            created_at: None,
        }
    }

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn perfect_model() {
        let inputs = ids("input_", 3);
        let evals: Vec<_> = inputs.iter().map(|i| eval("m", i, Some(0.0), Some(2000.0), 2000.0)).collect();
        let r = build_report("r", &evals, &[], &["m".into()], &inputs, Map::new()).unwrap();
        assert_eq!(r.table2, vec![Table2Row { model_id: "m".into(), mae: Some(0.0), mae_pct: Some(0.0), n_used: 3 }]);
    }

    #[test]
    fn failures_render_dash_and_are_excluded() {
        let inputs = ids("input_", 10);
        let evals: Vec<_> = inputs
            .iter()
            .enumerate()
            .map(|(k, i)| if (4..8).contains(&k) { eval("m", i, None, None, 2000.0) } else { eval("m", i, Some(10.0), Some(2100.0), 2000.0) })
            .collect();
        let r = build_report("r", &evals, &[], &["m".into()], &inputs, Map::new()).unwrap();
        assert_eq!(r.table2[0].n_used, 6);
        assert_eq!(r.table1[0].cells.iter().filter(|c| c.is_none()).count(), 4);
        let md = table1_markdown(&r);
        assert_eq!(md.lines().nth(2).unwrap().matches("| - ").count(), 4);
    }

    #[test]
    fn grid_incomplete() {
        let inputs = ids("input_", 2);
        let evals = vec![eval("m", "input_1", Some(1.0), Some(1.0), 1.0)];
        match build_report("r", &evals, &[], &["m".into()], &inputs, Map::new()) {
            Err(ReportError::GridIncomplete(missing)) => assert_eq!(missing, vec![("m".to_string(), "input_2".to_string())]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn timing_and_fig3() {
        let inputs = ids("input_", 2);
        let models = vec!["a".to_string(), "b".to_string()];
        let evals: Vec<_> = models
            .iter()
            .flat_map(|m| inputs.iter().map(move |i| eval(m, i, Some(1.0), Some(1900.0), 2000.0)))
            .collect();
        let recs = vec![record("a", "input_1", 5), record("a", "input_2", 7), record("b", "input_1", 1), record("b", "input_2", 2)];
        let r = build_report("r", &evals, &recs, &models, &inputs, Map::new()).unwrap();
        assert_eq!(r.timing[0].total_ms, 12);
        assert_eq!(r.timing[1].per_request_ms, vec![1, 2]);
        assert_eq!(fig3_csv(&r), "input_id,target,a,b\ninput_1,2000.00,1900.00,1900.00\ninput_2,2000.00,1900.00,1900.00\n");
    }

    #[test]
    fn emit_cardinality_and_idempotence() {
        let inputs = ids("input_", 2);
        let evals: Vec<_> = inputs.iter().map(|i| eval("m", i, Some(3.0), Some(1.0), 2.0)).collect();
        let r = build_report("r", &evals, &[], &["m".into()], &inputs, Map::new()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_only = emit(&r, &dir.path().join("a"), &[Format::Csv]).unwrap();
        assert_eq!(csv_only.iter().filter(|p| p.extension().unwrap() == "csv").count(), 4);
        let both = emit(&r, &dir.path().join("b"), &[Format::Csv, Format::Markdown]).unwrap();
        assert_eq!(both.iter().filter(|p| p.extension().unwrap() == "csv").count(), 4);
        assert_eq!(both.iter().filter(|p| p.extension().unwrap() == "md").count(), 2);
        let first: Vec<Vec<u8>> = both.iter().map(|p| std::fs::read(p).unwrap()).collect();
        let again = emit(&r, &dir.path().join("b"), &[Format::Csv, Format::Markdown]).unwrap();
        let second: Vec<Vec<u8>> = again.iter().map(|p| std::fs::read(p).unwrap()).collect();
        assert_eq!(first, second);
    }
}
