#![allow(dead_code)]

use mealbench::report::Table2Row;

/// Published per-model calorie-target errors: (model, MAE kcal, MAE %, inputs used).
pub const PUBLISHED_ERRORS: [(&str, f64, f64, usize); 10] = [
    ("claude-3.5-haiku", 128.23, 8.99, 10),
    ("claude-3.5-sonnet", 99.16, 4.85, 10),
    ("deepseek-v3", 190.61, 4.85, 6),
    ("gemini-1.5-pro", 182.16, 10.44, 10),
    ("gemini-2.0-flash", 179.16, 9.74, 10),
    ("gpt-3.5-turbo", 54.16, 3.68, 10),
    ("gpt-4o", 189.76, 13.47, 10),
    ("gpt-4o-mini", 329.06, 24.67, 10),
    ("llama-3.1-8b", 34.14, 1.55, 10),
    ("llama-3.1-70b", 109.21, 8.08, 10),
];

pub fn published_rows() -> Vec<Table2Row> {
    PUBLISHED_ERRORS
        .iter()
        .map(|&(m, mae, pct, n)| Table2Row { model_id: m.into(), mae: Some(mae), mae_pct: Some(pct), n_used: n })
        .collect()
}

pub fn golden(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}
