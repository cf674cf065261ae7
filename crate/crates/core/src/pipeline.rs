//! End-to-end steps behind the command-line subcommands.
//!
//! Output layout under the configured root:
//!
//! ```text
//! catalog.json                 ingest cache
//! profiles.json                last generated profiles
//! runs/<run_id>/run.json       models, inputs, targets, settings
//! runs/<run_id>/prompts/       one rendered prompt per input
//! runs/<run_id>/<model_id>/    <input_id>.txt + <input_id>.meta.json
//! runs/<run_id>/metrics.csv    flat per-cell metrics (also summary.csv, items.csv)
//! runs/<run_id>/report/        tables and figure data
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::{load_catalog, CatalogError};
use crate::gateway::{
    load_transcripts, write_transcripts, Gateway, GatewayError, GenerationRecord, GenerationStatus, Manifest, RetryPolicy,
};
use crate::parser::{grade_completeness, parse_plans, ParseWarning};
use crate::profile::{generate_profiles, profiles_from_json, profiles_to_json, sample_pool, ProfileError, ProfileSettings};
use crate::prompt::{attach_few_shot, augment_with_retrieval, render_prompt, ExampleBlock, PromptError, PromptTemplate};
use crate::reconcile::{evaluate_cell, ground_plan, total_discrepancies, GroundedPlan, TotalDiscrepancy, TotalMode};
use crate::report::{build_report, emit, write_items_csv, write_metrics_csv, write_summary_csv, EvaluationReport, Format, ReportError};
use crate::{Catalog, ConsumptionProfile, InputEvaluation};

pub const CATALOG_CACHE: &str = "catalog.json";
pub const PROFILES_FILE: &str = "profiles.json";
pub const RUN_FILE: &str = "run.json";
pub const EVALUATION_FILE: &str = "evaluation.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("data integrity: {0}")]
    DataIntegrity(String),
    #[error("incomplete grid: {0}")]
    GridIncomplete(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl PipelineError {
    /// 2 missing input, 3 data integrity, 4 incomplete grid, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::MissingInput(_) => 2,
            Self::DataIntegrity(_) => 3,
            Self::GridIncomplete(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl From<CatalogError> for PipelineError {
    fn from(e: CatalogError) -> Self {
        match &e {
            CatalogError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => Self::MissingInput(e.to_string()),
            CatalogError::Io { .. } => Self::Io(e.to_string()),
            _ => Self::DataIntegrity(e.to_string()),
        }
    }
}

impl From<ProfileError> for PipelineError {
    fn from(e: ProfileError) -> Self {
        Self::DataIntegrity(e.to_string())
    }
}

impl From<PromptError> for PipelineError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::Io { .. } => Self::MissingInput(e.to_string()),
            _ => Self::DataIntegrity(e.to_string()),
        }
    }
}

impl From<GatewayError> for PipelineError {
    fn from(e: GatewayError) -> Self {
        match &e {
            GatewayError::MissingApiKey(_) | GatewayError::Io { .. } => Self::MissingInput(e.to_string()),
            GatewayError::MissingTranscript { .. } => Self::GridIncomplete(e.to_string()),
            _ => Self::DataIntegrity(e.to_string()),
        }
    }
}

impl From<ReportError> for PipelineError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::GridIncomplete(_) => Self::GridIncomplete(e.to_string()),
            ReportError::IoFailure { .. } => Self::Io(e.to_string()),
        }
    }
}

/// Every knob of a run. Relative paths in a config file resolve against the
/// file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub food_csv: PathBuf,
    pub nutrient_csv: PathBuf,
    pub portion_csv: Option<PathBuf>,
    pub pool_size: usize,
    pub profile_count: usize,
    pub seed: u64,
    pub template: Option<PathBuf>,
    pub few_shot: bool,
    pub rag: bool,
    /// `None` uses the shipped ten-model roster.
    pub manifest: Option<PathBuf>,
    pub stub_dir: Option<PathBuf>,
    pub parallelism: usize,
    pub out: PathBuf,
    pub total_mode: TotalMode,
    pub match_threshold: f64,
    pub run_id: Option<String>,
    pub retry_base_ms: u64,
    pub formats: Vec<Format>,
    pub profiles: ProfileSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            food_csv: PathBuf::from("fdc/food.csv"),
            nutrient_csv: PathBuf::from("fdc/food_nutrient.csv"),
            portion_csv: None,
            pool_size: 200,
            profile_count: 10,
            seed: 42,
            template: None,
            few_shot: true,
            rag: false,
            manifest: None,
            stub_dir: None,
            parallelism: 4,
            out: PathBuf::from("."),
            total_mode: TotalMode::ItemSum,
            match_threshold: 0.6,
            run_id: None,
            retry_base_ms: 1000,
            formats: vec![Format::Csv, Format::Markdown],
            profiles: ProfileSettings::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::MissingInput(format!("{}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| PipelineError::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, body).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), PipelineError> {
    write(path, &(serde_json::to_string_pretty(value).expect("serializable") + "\n"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let mut cfg: Self =
            serde_json::from_str(&read(path)?).map_err(|e| PipelineError::DataIntegrity(format!("{}: {e}", path.display())))?;
        cfg.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        rebase(base, &mut self.food_csv);
        rebase(base, &mut self.nutrient_csv);
        rebase(base, &mut self.out);
        for p in [&mut self.portion_csv, &mut self.template, &mut self.manifest, &mut self.stub_dir].into_iter().flatten() {
            rebase(base, p);
        }
    }

    /// Short hash of everything that can change results; the output root and
    /// run-id override are left out.
    pub fn config_hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.run_id = None;
        c.parallelism = 0;
        let digest = Sha256::digest(serde_json::to_vec(&c).expect("serializable"));
        hex::encode(&digest[..4])
    }

    /// `<seed>-<UTC yyyymmdd>-<hash>` unless set explicitly.
    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| {
            format!("{}-{}-{}", self.seed, chrono::Utc::now().format("%Y%m%d"), self.config_hash())
        })
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.out.join("runs").join(run_id)
    }

    fn settings(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("seed".into(), self.seed.into());
        m.insert("pool_size".into(), self.pool_size.into());
        m.insert("profile_count".into(), self.profile_count.into());
        m.insert("few_shot".into(), self.few_shot.into());
        m.insert("rag".into(), self.rag.into());
        m.insert("template".into(), self.template.as_ref().map_or("default".into(), |p| p.display().to_string()).into());
        m.insert("total_mode".into(), serde_json::to_value(self.total_mode).expect("serializable"));
        m.insert("match_threshold".into(), self.match_threshold.into());
        m.insert("plans_requested".into(), crate::parser::REQUESTED_PLANS.into());
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputTarget {
    pub input_id: String,
    pub target: f64,
}

/// Written by `run`, read by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub run_id: String,
    pub models: Vec<String>,
    pub inputs: Vec<InputTarget>,
    pub settings: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub model_id: String,
    pub input_id: String,
    pub status: GenerationStatus,
    pub latency_ms: u64,
    pub attempts: u32,
    pub evaluation: InputEvaluation,
    pub warnings: Vec<ParseWarning>,
    pub discrepancies: Vec<TotalDiscrepancy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub run: RunFile,
    pub cells: Vec<CellReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub records: usize,
    pub dropped: usize,
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestSummary, PipelineError> {
    let catalog: Catalog = load_catalog(&cfg.food_csv, &cfg.nutrient_csv, cfg.portion_csv.as_deref())?;
    let json = catalog.to_json().map_err(|e| PipelineError::Io(e.to_string()))?;
    write(&cfg.out.join(CATALOG_CACHE), &(json + "\n"))?;
    Ok(IngestSummary { records: catalog.len(), dropped: catalog.dropped() })
}

pub fn load_cached_catalog(cfg: &RunConfig) -> Result<Catalog, PipelineError> {
    let path = cfg.out.join(CATALOG_CACHE);
    let text = fs::read_to_string(&path)
        .map_err(|_| PipelineError::MissingInput(format!("{} not found; run `ingest` first", path.display())))?;
    Ok(Catalog::from_json(&text)?)
}

pub fn cmd_profiles(cfg: &RunConfig) -> Result<Vec<ConsumptionProfile>, PipelineError> {
    let catalog = load_cached_catalog(cfg)?;
    let pool = sample_pool(&catalog, cfg.pool_size, cfg.seed)?;
    let profiles = generate_profiles(&pool, cfg.profile_count, cfg.seed, &cfg.profiles)?;
    write(&cfg.out.join(PROFILES_FILE), &(profiles_to_json(&profiles).expect("serializable") + "\n"))?;
    Ok(profiles)
}

pub fn load_manifest(cfg: &RunConfig) -> Result<Manifest, PipelineError> {
    let manifest = match &cfg.manifest {
        Some(p) if !p.exists() => return Err(PipelineError::MissingInput(format!("manifest {} not found", p.display()))),
        Some(p) => Manifest::load(p)?,
        None => Manifest::default_roster(),
    };
    Ok(match &cfg.stub_dir {
        Some(dir) => manifest.with_stub_dir(dir),
        None => manifest,
    })
}

/// Renders the full prompt for each profile, in profile order.
pub fn build_prompts(cfg: &RunConfig, profiles: &[ConsumptionProfile], catalog: &Catalog) -> Result<Vec<(String, String)>, PipelineError> {
    let template = match &cfg.template {
        Some(p) => PromptTemplate::from_file(p)?,
        None => PromptTemplate::default(),
    };
    let examples = if cfg.few_shot { ExampleBlock::defaults() } else { Vec::new() };
    profiles
        .iter()
        .map(|p| {
            let mut prompt = attach_few_shot(render_prompt(p, &template)?, &examples)?;
            if cfg.rag {
                prompt = augment_with_retrieval(prompt, p, catalog);
            }
            Ok((p.profile_id.clone(), prompt.render()))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_id: String,
    pub run_dir: PathBuf,
    pub records: Vec<GenerationRecord>,
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    let manifest = load_manifest(cfg)?;
    let gateway = Gateway::from_manifest(&manifest)?
        .with_retry(RetryPolicy { base_delay: std::time::Duration::from_millis(cfg.retry_base_ms), ..RetryPolicy::default() });
    let catalog = load_cached_catalog(cfg)?;
    let profiles = cmd_profiles(cfg)?;
    let prompts = build_prompts(cfg, &profiles, &catalog)?;

    let run_id = cfg.run_id();
    let run_dir = cfg.run_dir(&run_id);
    for (input_id, text) in &prompts {
        write(&run_dir.join("prompts").join(format!("{input_id}.txt")), text)?;
    }
    write(&run_dir.join(PROFILES_FILE), &(profiles_to_json(&profiles).expect("serializable") + "\n"))?;
    let run = RunFile {
        run_id: run_id.clone(),
        models: manifest.ids(),
        inputs: profiles.iter().map(|p| InputTarget { input_id: p.profile_id.clone(), target: p.targets.total_calories }).collect(),
        settings: cfg.settings(),
    };
    write_json(&run_dir.join(RUN_FILE), &run)?;

    let records = gateway.run_batch(&prompts, cfg.parallelism);
    write_transcripts(&run_dir, &records)?;
    for m in &run.models {
        let total: u64 = records.iter().filter(|r| &r.model_id == m).map(|r| r.latency_ms).sum();
        log::info!("{m}: {total} ms over {} requests", prompts.len());
    }
    Ok(RunSummary { run_id, run_dir, records })
}

/// Parses, grades and grounds one transcript.
pub fn evaluate_record(
    record: &GenerationRecord,
    target: f64,
    catalog: &Catalog,
    mode: TotalMode,
    threshold: f64,
) -> (CellReport, Vec<GroundedPlan>) {
    let (plans, warnings) = parse_plans::<f64>(&record.raw_text);
    let flags = grade_completeness(&plans, &warnings, &record.raw_text);
    let grounded: Vec<GroundedPlan> = plans.iter().map(|p| ground_plan(p, catalog, threshold)).collect();
    let evaluation = evaluate_cell(&record.model_id, &record.input_id, target, &plans, &grounded, flags, mode);
    let discrepancies = total_discrepancies(&plans);
    for d in &discrepancies {
        log::warn!(
            "{}/{} plan {}: item sum {} vs stated total {}",
            record.model_id,
            record.input_id,
            d.option_index,
            d.item_sum,
            d.reported_total
        );
    }
    let cell = CellReport {
        model_id: record.model_id.clone(),
        input_id: record.input_id.clone(),
        status: record.status,
        latency_ms: record.latency_ms,
        attempts: record.attempts,
        evaluation,
        warnings,
        discrepancies,
    };
    (cell, grounded)
}

fn read_run_file(run_dir: &Path) -> Result<RunFile, PipelineError> {
    let path = run_dir.join(RUN_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|_| PipelineError::GridIncomplete(format!("{} not found; nothing to evaluate", path.display())))?;
    let run: RunFile = serde_json::from_str(&text).map_err(|e| PipelineError::DataIntegrity(format!("{}: {e}", path.display())))?;
    if run.models.is_empty() || run.inputs.is_empty() {
        return Err(PipelineError::GridIncomplete(format!("{} lists an empty grid", path.display())));
    }
    Ok(run)
}

fn records_of(cells: &[CellReport]) -> Vec<GenerationRecord> {
    cells
        .iter()
        .map(|c| GenerationRecord {
            input_id: c.input_id.clone(),
            model_id: c.model_id.clone(),
            raw_text: String::new(),
            latency_ms: c.latency_ms,
            attempts: c.attempts,
            status: c.status,
            created_at: None,
        })
        .collect()
}

fn report_from(file: &EvaluationFile) -> Result<EvaluationReport, PipelineError> {
    let evals: Vec<InputEvaluation> = file.cells.iter().map(|c| c.evaluation.clone()).collect();
    let inputs: Vec<String> = file.run.inputs.iter().map(|i| i.input_id.clone()).collect();
    Ok(build_report(&file.run.run_id, &evals, &records_of(&file.cells), &file.run.models, &inputs, file.run.settings.clone())?)
}

#[derive(Debug, Clone)]
pub struct EvaluateSummary {
    pub run_dir: PathBuf,
    pub report: EvaluationReport,
    pub written: Vec<PathBuf>,
}

pub fn cmd_evaluate(cfg: &RunConfig, run_id: &str) -> Result<EvaluateSummary, PipelineError> {
    let run_dir = cfg.run_dir(run_id);
    let run = read_run_file(&run_dir)?;
    let catalog = load_cached_catalog(cfg)?;
    let inputs: Vec<String> = run.inputs.iter().map(|i| i.input_id.clone()).collect();
    let records = load_transcripts(&run_dir, &run.models, &inputs)?;

    let mut cells = Vec::with_capacity(records.len());
    let mut grounded = Vec::with_capacity(records.len());
    for r in &records {
        let target = run.inputs.iter().find(|i| i.input_id == r.input_id).map(|i| i.target).expect("input listed");
        let (cell, g) = evaluate_record(r, target, &catalog, cfg.total_mode, cfg.match_threshold);
        cells.push(cell);
        grounded.push(g);
    }

    let evals: Vec<InputEvaluation> = cells.iter().map(|c| c.evaluation.clone()).collect();
    write_metrics_csv(&run_dir.join("metrics.csv"), run_id, &evals)?;
    write_items_csv(
        &run_dir.join("items.csv"),
        cells.iter().zip(&grounded).map(|(c, g)| (c.model_id.as_str(), c.input_id.as_str(), g.as_slice())),
    )?;
    let file = EvaluationFile { run, cells };
    write_json(&run_dir.join(EVALUATION_FILE), &file)?;
    let report = report_from(&file)?;
    write_summary_csv(&run_dir.join("summary.csv"), &report.table2)?;
    let written = emit(&report, &run_dir.join("report"), &cfg.formats)?;
    Ok(EvaluateSummary { run_dir, report, written })
}

/// Rebuilds report files from a stored evaluation.
pub fn cmd_report(cfg: &RunConfig, run_id: &str) -> Result<EvaluateSummary, PipelineError> {
    let run_dir = cfg.run_dir(run_id);
    let path = run_dir.join(EVALUATION_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|_| PipelineError::MissingInput(format!("{} not found; run `evaluate` first", path.display())))?;
    let file: EvaluationFile = serde_json::from_str(&text).map_err(|e| PipelineError::DataIntegrity(format!("{}: {e}", path.display())))?;
    let report = report_from(&file)?;
    let written = emit(&report, &run_dir.join("report"), &cfg.formats)?;
    Ok(EvaluateSummary { run_dir, report, written })
}

/// Ingest, run and evaluate in one go.
pub fn cmd_all(cfg: &RunConfig) -> Result<EvaluateSummary, PipelineError> {
    let ingest = cmd_ingest(cfg)?;
    log::info!("{} records loaded, {} dropped", ingest.records, ingest.dropped);
    let run = cmd_run(cfg)?;
    cmd_evaluate(cfg, &run.run_id)
}

/// Reads profiles written by [`cmd_profiles`].
pub fn load_profiles(cfg: &RunConfig) -> Result<Vec<ConsumptionProfile>, PipelineError> {
    let path = cfg.out.join(PROFILES_FILE);
    profiles_from_json(&read(&path)?).map_err(|e| PipelineError::DataIntegrity(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_shape_and_hash_ignores_out() {
        let a = RunConfig::default();
        let b = RunConfig { out: PathBuf::from("/elsewhere"), parallelism: 1, ..RunConfig::default() };
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), RunConfig { seed: 7, ..RunConfig::default() }.config_hash());
        let id = a.run_id();
        let parts: Vec<&str> = id.split('-').collect();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0], "42");
        assert_eq!(parts[1].len(), 8);
        assert_eq!(parts[2].len(), 8);
        assert_eq!(RunConfig { run_id: Some("fixed".into()), ..RunConfig::default() }.run_id(), "fixed");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(PipelineError::MissingInput(String::new()).exit_code(), 2);
        assert_eq!(PipelineError::DataIntegrity(String::new()).exit_code(), 3);
        assert_eq!(PipelineError::GridIncomplete(String::new()).exit_code(), 4);
        let missing = RunConfig { food_csv: "/nonexistent/food.csv".into(), ..RunConfig::default() };
        assert_eq!(cmd_ingest(&missing).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn config_paths_rebase() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"food_csv": "a.csv", "manifest": "m.json", "seed": 9}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.food_csv, dir.path().join("a.csv"));
        assert_eq!(cfg.manifest, Some(dir.path().join("m.json")));
        assert_eq!(cfg.out, dir.path().join("."));
        assert_eq!((cfg.seed, cfg.pool_size), (9, 200));
    }

    #[test]
    fn empty_run_dir_is_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { out: dir.path().to_path_buf(), ..RunConfig::default() };
        fs::create_dir_all(cfg.run_dir("x")).unwrap();
        assert_eq!(cmd_evaluate(&cfg, "x").unwrap_err().exit_code(), 4);
    }
}
