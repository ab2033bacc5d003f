//! `survstack` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use survstack::estimator::Mapping;
use survstack::grids::GridPolicy;
use survstack::learners::LearnerSpec;
use survstack::simulate::Skew;
use survstack::stacking::TimeBasis;

#[derive(Parser, Debug)]
#[command(
    name = "survstack",
    version,
    about = "Survival curves from binary classifiers fitted on stacked data",
    args_override_self = true
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "SURVSTACK_THREADS")]
    threads: Option<usize>,

    /// key = value file merged under the command-line flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model and save it as JSON.
    Fit(FitArgs),
    /// Predict survival curves for new covariates from a saved model.
    Predict(PredictArgs),
    /// Cross-validated IPCW Brier scores against the Kaplan-Meier reference.
    Evaluate(EvaluateArgs),
    /// Generate a simulated dataset plus its true survival curves.
    Simulate(SimulateArgs),
    /// Monte Carlo comparison of methods against the simulation truth.
    Benchmark(BenchmarkArgs),
    /// Write one stacked dataset as CSV (for inspection).
    DumpStack(DumpStackArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Follow-up time column.
    #[arg(long, default_value = "time")]
    time_col: String,
    /// Event indicator column (1 = event, 0 = censored).
    #[arg(long, default_value = "event")]
    event_col: String,
    /// Entry (truncation) time column; optional in the file.
    #[arg(long, default_value = "entry")]
    entry_col: String,
    /// Comma-separated columns to drop, e.g. an identifier.
    #[arg(long, value_delimiter = ',')]
    ignore_cols: Vec<String>,
    /// none, left or right; inferred from the entry column when omitted.
    #[arg(long)]
    truncation: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct EstimatorArgs {
    /// mean, logistic, logistic_interactions, empirical,
    /// gbt[:TREES[:DEPTH[:SHRINKAGE]]] or super_learner[:FOLDS][(a+b+...)].
    #[arg(long, default_value = "super_learner")]
    learner: LearnerSpec,
    /// Approximation grid: `all` or `kN` (N quantile cut points).
    #[arg(long, default_value = "all")]
    approx_grid: GridPolicy,
    /// Regression grid for the event-stratum stacks.
    #[arg(long, default_value = "k40")]
    event_grid: GridPolicy,
    /// Regression grid for the censored-stratum stacks.
    #[arg(long, default_value = "k40")]
    cens_grid: GridPolicy,
    /// Map from hazard increments to survival: exp or prod.
    #[arg(long, default_value = "exp")]
    mapping: Mapping,
    /// Make the fitted cumulative distribution paths monotone.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    isotonize: bool,
    /// Also make the entry-distribution paths monotone.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    isotonize_g: bool,
    /// Time encoding in the stacked design: continuous or dummy.
    #[arg(long, default_value = "continuous")]
    basis: TimeBasis,
    /// Floor for the hazard denominator.
    #[arg(long, default_value_t = 1e-12)]
    denom_floor: f64,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// global (stacked distribution functions) or local (discrete hazards).
    #[arg(long, default_value = "global")]
    method: String,
    /// Reversal time for right-truncated data (default: largest entry time).
    #[arg(long)]
    tau: Option<f64>,
    /// Local method: only events end a person-period (censoring does not count).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    events_only: bool,
    #[arg(long)]
    seed: u64,
    /// Output model JSON.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// CSV holding the model's covariate columns (other columns are ignored).
    #[arg(long, value_name = "PATH")]
    newdata: PathBuf,
    /// Comma-separated times (default: the model's grid).
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Long-format CSV output (default: stdout).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Landmarks as percentiles of the event times, e.g. q50,q75,q90.
    #[arg(long, value_delimiter = ',', default_value = "q50,q75,q90")]
    landmarks: Vec<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario 1 to 5.
    #[arg(long)]
    scenario: u8,
    /// left or right.
    #[arg(long)]
    skew: Skew,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Number of intervals on [0, 100] (scenario 5; default 20).
    #[arg(long)]
    intervals: Option<usize>,
    /// Target censoring rate among retained subjects.
    #[arg(long, default_value_t = 0.25)]
    censoring: f64,
    /// Dataset CSV.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// True survival curves on the 1000-point metric grid
    /// (default: next to --out with a `.truth.csv` suffix).
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_value = "1")]
    scenarios: Vec<u8>,
    #[arg(long, value_delimiter = ',', default_value = "left")]
    skews: Vec<Skew>,
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    /// Scenario 5 interval count.
    #[arg(long)]
    intervals: Option<usize>,
    /// Any of global, global-exp, global-prod, local, km, oracle.
    #[arg(long, value_delimiter = ',', default_value = "global,local,km,oracle")]
    methods: Vec<String>,
    #[arg(long, default_value = "gbt")]
    learner: LearnerSpec,
    #[arg(long, default_value = "all")]
    approx_grid: GridPolicy,
    /// Regression grid of the global method and grid of the local method.
    #[arg(long, default_value = "k40")]
    regression_grid: GridPolicy,
    /// Mapping used by the plain `global` method.
    #[arg(long, default_value = "exp")]
    mapping: Mapping,
    /// Test subjects per replicate.
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DumpStackArgs {
    #[command(flatten)]
    data: DataArgs,
    /// f1, f0, g1, g0 or local.
    #[arg(long)]
    stack: String,
    /// Grid policy for the stack's time points.
    #[arg(long, default_value = "k40")]
    grid: GridPolicy,
    #[arg(long, default_value = "continuous")]
    basis: TimeBasis,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn fail(category: &str, msg: impl std::fmt::Display) -> ExitCode {
    let msg = msg.to_string().replace('\n', " ");
    eprintln!("error[{category}]: {}", msg.trim());
    ExitCode::from(if category == "usage" { 2 } else { 1 })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let root = Cli::command();
    let argv = match config::merge(argv, &root) {
        Ok(a) => a,
        Err(e) => return fail("config", format!("{e:#}")),
    };
    let matches = match root.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => return fail("usage", e.to_string().lines().next().unwrap_or("")),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail("usage", "--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail("internal", e);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e
                .chain()
                .find_map(|c| c.downcast_ref::<survstack::Error>())
                .map_or("io", survstack::Error::category);
            fail(category, format!("{e:#}"))
        }
    }
}
