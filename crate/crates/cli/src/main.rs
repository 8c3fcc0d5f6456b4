//! `sitrep`: build, export, serve and evaluate situation reports.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors (including missing input files).

mod commands;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sitrep", version, about = "Situation reports from news corpora")]
struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate corpus files and print corpus statistics as JSON.
    Ingest(IngestArgs),
    /// Run the full pipeline and write the report JSON.
    Build(BuildArgs),
    /// Convert a report JSON file to JSON or HTML.
    Export(ExportArgs),
    /// Serve a report over a read-only HTTP API.
    Serve(ServeArgs),
    /// Compute edit, review and citation metrics.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus JSONL files.
    #[arg(long, required = true, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    /// Source bias ratings CSV (`source,rating`).
    #[arg(long)]
    pub bias_csv: Option<PathBuf>,
    /// Timespan length in weeks.
    #[arg(long, default_value_t = 2)]
    pub weeks: u32,
    /// Write statistics here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// TOML config; relative paths inside it resolve against its directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus JSONL files (replaces the configured list).
    #[arg(long, num_args = 1..)]
    pub corpus: Vec<PathBuf>,
    #[arg(long)]
    pub bias_csv: Option<PathBuf>,
    /// Report JSON destination.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write the per-timespan cluster dump here.
    #[arg(long)]
    pub dump_clusters: Option<PathBuf>,
    #[arg(long)]
    pub scenario_name: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub weeks: Option<u32>,
    #[arg(long)]
    pub cluster_threshold: Option<f64>,
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    #[arg(long)]
    pub n_sets: Option<usize>,
    #[arg(long)]
    pub dedup_threshold: Option<f64>,
    #[arg(long)]
    pub sentences_per_snippet: Option<usize>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub entail_threshold: Option<f64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// RFC 3339 timestamp recorded in the report.
    #[arg(long)]
    pub generated_at: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Report JSON to read.
    #[arg(long)]
    pub report: PathBuf,
    /// `json` or `html`.
    #[arg(long, default_value = "html")]
    pub format: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Origin allowed to call the API from a browser.
    #[arg(long)]
    pub cors_origin: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Edit pairs JSONL (`generated`, `edited`, `question_id`).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Review labels CSV.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Report JSON whose summaries get citation precision and recall.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Config supplying the entailment judge (defaults to the mock).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub entail_threshold: Option<f64>,
    /// Write the metrics JSON here.
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

fn init_logging(quiet: bool) {
    let default = if quiet { "warn" } else { "info" };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .with_target(false)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.quiet);
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Build(a) => commands::build(a),
        Command::Export(a) => commands::export(a),
        Command::Serve(a) => commands::serve(a),
        Command::Eval(a) => commands::eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code())
        }
    }
}
