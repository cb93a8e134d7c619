use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prefsel_core::{Strategy, DEFAULT_BETA};

mod commands;
mod sim_config;

/// Preference-pair selection by response-embedding similarity.
#[derive(Parser, Debug)]
#[command(name = "prefsel", version, about)]
struct Cli {
    /// Root seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// DPO temperature used for training.
    #[arg(long, global = true, default_value_t = DEFAULT_BETA)]
    beta: f64,

    /// Format of tabular artifacts.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pick one pair per prompt group.
    Select(SelectArgs),
    /// Rank pre-paired data by similarity and cut into hard and easy parts.
    SortSplit(SortSplitArgs),
    /// Run the synthetic strategy comparison.
    Simulate(SimulateArgs),
    /// Train a linear DPO policy on labeled pairs.
    Train(TrainArgs),
    /// Test-set margins, loss and agreement of a saved policy.
    Eval(EvalArgs),
    /// Pair-similarity drift between two embedding files.
    Drift(DriftArgs),
    /// Summarize a simulation report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    groups: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Strategy,
    #[arg(long)]
    out: PathBuf,
    /// Drop responses longer than this many tokens.
    #[arg(long, default_value_t = 512, conflicts_with = "no_length_filter")]
    max_token_length: usize,
    #[arg(long)]
    no_length_filter: bool,
    /// Keep only groups whose best score is at least this multiple of the runner-up.
    #[arg(long)]
    min_score_ratio: Option<f64>,
}

#[derive(Args, Debug)]
struct SortSplitArgs {
    #[arg(long)]
    pairs: PathBuf,
    /// Share of pairs that goes to the hard part, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    #[arg(long)]
    out_hard: PathBuf,
    #[arg(long)]
    out_easy: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Line-delimited JSON config; later lines override earlier ones.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-step test margins of every run.
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Write the first seed's world (groups, embeddings, labeled pairs) here.
    #[arg(long)]
    export_world: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    labeled: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    out_policy: PathBuf,
    #[arg(long)]
    out_history: PathBuf,
    /// Held-out labeled pairs for the report footer of the history.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long)]
    no_shuffle: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    policy: PathBuf,
    #[arg(long)]
    labeled: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DriftArgs {
    #[arg(long)]
    store_a: PathBuf,
    #[arg(long)]
    store_b: PathBuf,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-pair deltas.
    #[arg(long)]
    deltas: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Report written by `simulate`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    let st: Strategy = s.parse().map_err(|e| format!("{e}"))?;
    if !Strategy::SELECTABLE.contains(&st) {
        return Err(format!("{s} is not a selection strategy"));
    }
    Ok(st)
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(prefsel_core::Error),
}

impl From<prefsel_core::Error> for CliError {
    fn from(e: prefsel_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    if !(cli.beta > 0.0 && cli.beta.is_finite()) {
        return Err(CliError::Usage(format!(
            "--beta must be positive, got {}",
            cli.beta
        )));
    }
    let Format::Csv = cli.format;
    match cli.command {
        Command::Select(a) => commands::select(&a, cli.seed),
        Command::SortSplit(a) => commands::sort_split(&a),
        Command::Simulate(a) => commands::simulate(&a, cli.seed, cli.beta),
        Command::Train(a) => commands::train(&a, cli.seed, cli.beta),
        Command::Eval(a) => commands::eval(&a),
        Command::Drift(a) => commands::drift(&a),
        Command::Report(a) => commands::report(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
