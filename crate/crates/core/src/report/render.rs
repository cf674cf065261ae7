use super::{EvaluationReport, Table2Row, TimingRow};

/// Cell text for a model that produced no plan.
pub const FAILED_CELL: &str = "-";

pub const TABLE2_COLUMNS: [&str; 4] = ["model_id", "mae", "mae_pct", "n_used"];
/// One row per model, in manifest order. Read by the chart renderer.
pub const TIMING_COLUMNS: [&str; 2] = ["model_id", "total_ms"];
/// Leading fig3 columns; one column per model id follows, empty where the
/// model produced no usable plan. Read by the chart renderer.
pub const FIG3_KEY_COLUMNS: [&str; 2] = ["input_id", "target"];

pub fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn cell_text(v: Option<f64>) -> String {
    v.map(fmt2).unwrap_or_else(|| FAILED_CELL.to_owned())
}

/// Marks every position holding the minimum present value; ties are all marked.
pub fn argmin_set(values: &[Option<f64>]) -> Vec<bool> {
    let min = values.iter().flatten().copied().fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
    values.iter().map(|v| matches!((v, min), (Some(x), Some(m)) if *x == m)).collect()
}

fn bold_if(text: String, bold: bool) -> String {
    if bold { format!("**{text}**") } else { text }
}

fn to_csv(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

fn markdown(header: &[String], align: &[&str], rows: Vec<Vec<String>>) -> String {
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    let mut out = line(header);
    out.push_str(&format!("|{}|\n", align.join("|")));
    for r in rows {
        out.push_str(&line(&r));
    }
    out
}

fn column_minima(report: &EvaluationReport) -> Vec<Vec<bool>> {
    // minima[input][model]
    (0..report.inputs.len())
        .map(|c| argmin_set(&report.table1.iter().map(|r| r.cells[c]).collect::<Vec<_>>()))
        .collect()
}

pub fn table1_csv(report: &EvaluationReport) -> String {
    let mut rows = vec![std::iter::once("model_id".to_owned()).chain(report.inputs.iter().cloned()).collect()];
    for r in &report.table1 {
        rows.push(std::iter::once(r.model_id.clone()).chain(r.cells.iter().map(|c| cell_text(*c))).collect());
    }
    to_csv(rows)
}

pub fn table1_markdown(report: &EvaluationReport) -> String {
    let minima = column_minima(report);
    let header: Vec<String> = std::iter::once("Model".to_owned()).chain(report.inputs.iter().cloned()).collect();
    let align: Vec<&str> = std::iter::once("---").chain(report.inputs.iter().map(|_| "---:")).collect();
    let rows = report
        .table1
        .iter()
        .enumerate()
        .map(|(m, r)| {
            std::iter::once(r.model_id.clone())
                .chain(r.cells.iter().enumerate().map(|(c, v)| bold_if(cell_text(*v), minima[c][m])))
                .collect()
        })
        .collect();
    markdown(&header, &align, rows)
}

pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut out = vec![TABLE2_COLUMNS.map(String::from).to_vec()];
    for r in rows {
        out.push(vec![r.model_id.clone(), cell_text(r.mae), cell_text(r.mae_pct), r.n_used.to_string()]);
    }
    to_csv(out)
}

pub fn table2_markdown(rows: &[Table2Row]) -> String {
    let mae_min = argmin_set(&rows.iter().map(|r| r.mae).collect::<Vec<_>>());
    let pct_min = argmin_set(&rows.iter().map(|r| r.mae_pct).collect::<Vec<_>>());
    let header = ["Model", "MAE (kcal)", "MAE (%)", "Inputs used"].map(String::from);
    let body = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                r.model_id.clone(),
                bold_if(cell_text(r.mae), mae_min[i]),
                bold_if(cell_text(r.mae_pct), pct_min[i]),
                r.n_used.to_string(),
            ]
        })
        .collect();
    markdown(&header, &["---", "---:", "---:", "---:"], body)
}

pub fn timing_csv(rows: &[TimingRow]) -> String {
    let mut out = vec![TIMING_COLUMNS.map(String::from).to_vec()];
    out.extend(rows.iter().map(|r| vec![r.model_id.clone(), r.total_ms.to_string()]));
    to_csv(out)
}

/// Missing totals are written as empty cells so plotting tools read them as gaps.
pub fn fig3_csv(report: &EvaluationReport) -> String {
    let mut rows = vec![FIG3_KEY_COLUMNS.map(String::from).into_iter().chain(report.models.iter().cloned()).collect()];
    for r in &report.fig3 {
        rows.push(
            [r.input_id.clone(), fmt2(r.target)]
                .into_iter()
                .chain(r.totals.iter().map(|t| t.map(fmt2).unwrap_or_default()))
                .collect(),
        );
    }
    to_csv(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn argmin_ties() {
        assert_eq!(argmin_set(&[Some(2.0), None, Some(1.0), Some(1.0)]), vec![false, false, true, true]);
        assert_eq!(argmin_set(&[None, None]), vec![false, false]);
    }

    #[test]
    fn table2_layout() {
        let rows = vec![
            Table2Row { model_id: "a".into(), mae: Some(1.005), mae_pct: Some(3.0), n_used: 10 },
            Table2Row { model_id: "b".into(), mae: None, mae_pct: None, n_used: 0 },
        ];
        assert_eq!(
            table2_markdown(&rows),
            "| Model | MAE (kcal) | MAE (%) | Inputs used |\n|---|---:|---:|---:|\n| a | **1.00** | **3.00** | 10 |\n| b | - | - | 0 |\n"
        );
        assert_eq!(table2_csv(&rows), "model_id,mae,mae_pct,n_used\na,1.00,3.00,10\nb,-,-,0\n");
    }

    proptest! {
        #[test]
        fn argmin_matches_bruteforce(values in prop::collection::vec(prop::option::of(0u8..5), 0..12)) {
            let vals: Vec<Option<f64>> = values.iter().map(|v| v.map(f64::from)).collect();
            let marks = argmin_set(&vals);
            for (i, v) in vals.iter().enumerate() {
                let expected = match v {
                    Some(x) => vals.iter().flatten().all(|y| x <= y),
                    None => false,
                };
                prop_assert_eq!(marks[i], expected);
            }
        }
    }
}
