//! `tablepruner`: forge training corpora, prune tables, benchmark search
//! strategies and score sub-tables.
//!
//! Exit codes: 0 success, 2 usage or bad input, 3 backend failure, 4 I/O.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tablepruner::search::Strategy;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Backend(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Backend(m) => write!(f, "backend error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tablepruner", version, about = "Verifier-guided table pruning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build progression, correction, preference and verifier corpora from SQL instances.
    Forge(ForgeArgs),
    /// Search for the best sub-table of one table.
    Prune(PruneArgs),
    /// Compare search strategies on forged instances under matched budgets.
    Bench(BenchArgs),
    /// Score a candidate sub-table against a reference.
    Score(ScoreArgs),
    /// Report cell and token compression of pruned outputs.
    CompressReport(CompressArgs),
    /// Generate random single-table SQL instances.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Output directory; a manifest.json is written there on success.
    #[arg(long, env = "TABLEPRUNER_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, env = "TABLEPRUNER_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Recall weight of the F-alpha score.
    #[arg(long, env = "TABLEPRUNER_ALPHA", default_value_t = 1.5)]
    pub alpha: f64,
    /// Run sequentially instead of on the thread pool. Outputs are identical.
    #[arg(long, env = "TABLEPRUNER_SEQUENTIAL")]
    pub sequential: bool,
}

#[derive(Debug, Args, Clone)]
pub struct ForgeArgs {
    /// JSONL of {question, sql, table}; table is CSV or `col:` text.
    #[arg(long, env = "TABLEPRUNER_INPUT")]
    pub input: PathBuf,
    /// JSONL instances whose raw tables must not be forged.
    #[arg(long, env = "TABLEPRUNER_BLOCKLIST")]
    pub blocklist: Option<PathBuf>,
    #[arg(long, env = "TABLEPRUNER_NEGATIVES_PER_STEP", default_value_t = 2)]
    pub negatives_per_step: usize,
    #[arg(long, env = "TABLEPRUNER_LAMBDA", default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, env = "TABLEPRUNER_BETA", default_value_t = 0.2)]
    pub beta: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone)]
pub struct SearchArgs {
    #[arg(long, env = "TABLEPRUNER_K", default_value_t = 2)]
    pub k: usize,
    #[arg(long, env = "TABLEPRUNER_B", default_value_t = 2)]
    pub b: usize,
    #[arg(long, env = "TABLEPRUNER_MAX_DEPTH", default_value_t = 4)]
    pub max_depth: usize,
    /// beam, best_of_n or sequential.
    #[arg(long, env = "TABLEPRUNER_STRATEGY", default_value = "beam")]
    pub strategy: Strategy,
}

#[derive(Debug, Args, Clone)]
pub struct RemoteArgs {
    #[arg(long, env = "TABLEPRUNER_PRUNER_ENDPOINT")]
    pub pruner_endpoint: Option<String>,
    #[arg(long, env = "TABLEPRUNER_VERIFIER_ENDPOINT")]
    pub verifier_endpoint: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long, env = "TABLEPRUNER_TIMEOUT", default_value_t = 30.0)]
    pub timeout: f64,
    /// Extra attempts after a transport failure or 5xx reply.
    #[arg(long, env = "TABLEPRUNER_RETRIES", default_value_t = 2)]
    pub retries: usize,
}

#[derive(Debug, Args, Clone)]
pub struct PruneArgs {
    #[arg(long, env = "TABLEPRUNER_QUESTION")]
    pub question: String,
    /// Raw table as CSV or `col:` text.
    #[arg(long, env = "TABLEPRUNER_TABLE")]
    pub table: PathBuf,
    /// Gold SQL; replaces any missing pruner or verifier endpoint with
    /// local oracle back-ends built from its trajectory.
    #[arg(long, env = "TABLEPRUNER_SQL")]
    pub sql: Option<String>,
    /// Error rate of the local oracle pruner.
    #[arg(long, env = "TABLEPRUNER_NOISE", default_value_t = 0.0)]
    pub noise: f64,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub remote: RemoteArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone)]
pub struct BenchArgs {
    /// JSONL of SQL instances, as for `forge`.
    #[arg(long, env = "TABLEPRUNER_CORPUS")]
    pub corpus: PathBuf,
    #[arg(long, env = "TABLEPRUNER_STRATEGIES", value_delimiter = ',', default_value = "beam,best_of_n,sequential")]
    pub strategies: Vec<Strategy>,
    #[arg(long, env = "TABLEPRUNER_DEPTHS", value_delimiter = ',', default_value = "1,2,3,4")]
    pub depths: Vec<usize>,
    #[arg(long, env = "TABLEPRUNER_K", value_delimiter = ',', default_value = "2")]
    pub k: Vec<usize>,
    #[arg(long, env = "TABLEPRUNER_B", default_value_t = 2)]
    pub b: usize,
    #[arg(long, env = "TABLEPRUNER_NOISE", value_delimiter = ',', default_value = "0,0.5")]
    pub noise: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone)]
pub struct ScoreArgs {
    #[arg(long)]
    pub candidate: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    /// Raw table both sub-tables are drawn from.
    #[arg(long)]
    pub raw: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone)]
pub struct CompressArgs {
    /// JSONL of SQL instances; line index is the instance id.
    #[arg(long, env = "TABLEPRUNER_CORPUS")]
    pub corpus: PathBuf,
    /// JSONL of {instance_id, table} pruned outputs.
    #[arg(long)]
    pub pruned: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub max_rows: usize,
    #[arg(long, default_value_t = 8)]
    pub max_cols: usize,
    #[command(flatten)]
    pub common: Common,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Forge(a) => commands::forge(&a),
        Command::Prune(a) => commands::prune(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Score(a) => commands::score(&a),
        Command::CompressReport(a) => commands::compress_report(&a),
        Command::Synth(a) => commands::synth(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tablepruner: {e}");
            ExitCode::from(e.code())
        }
    }
}
