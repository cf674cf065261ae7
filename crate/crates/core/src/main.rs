use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mealbench::pipeline::{self, PipelineError, RunConfig};
use mealbench::reconcile::TotalMode;

#[derive(Parser)]
#[command(name = "mealbench", version, about = "Generate and score LLM meal plans against USDA nutrient data")]
struct Cli {
    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root holding the catalog cache, profiles and runs/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Fixture directory for every stub model in the manifest.
    #[arg(long, global = true)]
    stub_dir: Option<PathBuf>,
    /// Append catalog reference values to every prompt.
    #[arg(long, global = true)]
    rag: bool,
    #[arg(long, global = true)]
    no_few_shot: bool,
    #[arg(long, global = true)]
    template: Option<PathBuf>,
    /// Use an explicit run id instead of seed-date-hash.
    #[arg(long, global = true)]
    run_id: Option<String>,
    #[arg(long, global = true)]
    food: Option<PathBuf>,
    #[arg(long, global = true)]
    nutrient: Option<PathBuf>,
    #[arg(long, global = true)]
    portion: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_mode)]
    total_mode: Option<TotalMode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load FDC tables and write the catalog cache.
    Ingest,
    /// Sample the food pool and write intake profiles.
    Profiles,
    /// Render prompts, query every model and store transcripts.
    Run,
    /// Parse, ground and score transcripts, then write the report.
    Evaluate,
    /// Re-render report files from a stored evaluation.
    Report,
    /// ingest, run and evaluate.
    All,
}

fn parse_mode(s: &str) -> Result<TotalMode, String> {
    match s {
        "item_sum" => Ok(TotalMode::ItemSum),
        "reported_total" => Ok(TotalMode::ReportedTotal),
        _ => Err(format!("expected item_sum or reported_total, got {s}")),
    }
}

fn config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &cli.manifest {
        cfg.manifest = Some(v.clone());
    }
    if let Some(v) = cli.parallelism {
        cfg.parallelism = v;
    }
    if let Some(v) = &cli.stub_dir {
        cfg.stub_dir = Some(v.clone());
    }
    if let Some(v) = &cli.template {
        cfg.template = Some(v.clone());
    }
    if let Some(v) = &cli.run_id {
        cfg.run_id = Some(v.clone());
    }
    if let Some(v) = &cli.food {
        cfg.food_csv = v.clone();
    }
    if let Some(v) = &cli.nutrient {
        cfg.nutrient_csv = v.clone();
    }
    if let Some(v) = &cli.portion {
        cfg.portion_csv = Some(v.clone());
    }
    if let Some(v) = cli.total_mode {
        cfg.total_mode = v;
    }
    cfg.rag |= cli.rag;
    cfg.few_shot &= !cli.no_few_shot;
    Ok(cfg)
}

fn print_report(summary: &pipeline::EvaluateSummary) {
    for row in &summary.report.table2 {
        let fmt = |v: Option<f64>| v.map_or("-".to_owned(), |x| format!("{x:.2}"));
        println!("{}: MAE {} kcal, {} %, {} inputs", row.model_id, fmt(row.mae), fmt(row.mae_pct), row.n_used);
    }
    println!("report written to {}", summary.run_dir.join("report").display());
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = config(cli)?;
    match cli.command {
        Command::Ingest => {
            let s = pipeline::cmd_ingest(&cfg)?;
            println!("{} records loaded, {} dropped", s.records, s.dropped);
        }
        Command::Profiles => {
            let profiles = pipeline::cmd_profiles(&cfg)?;
            println!("{} profiles written to {}", profiles.len(), cfg.out.join(pipeline::PROFILES_FILE).display());
        }
        Command::Run => {
            let s = pipeline::cmd_run(&cfg)?;
            println!("run {}: {} transcripts in {}", s.run_id, s.records.len(), s.run_dir.display());
        }
        Command::Evaluate => print_report(&pipeline::cmd_evaluate(&cfg, &cfg.run_id())?),
        Command::Report => print_report(&pipeline::cmd_report(&cfg, &cfg.run_id())?),
        Command::All => print_report(&pipeline::cmd_all(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
