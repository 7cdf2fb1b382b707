//! `swlb`: fit survey-weighted models, run simulation scenarios and check
//! resampling weights.

mod commands;
mod scenario;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use swlb_core::sim::Method;
use swlb_core::{Error, ResampleScheme};

#[derive(Parser, Debug)]
#[command(name = "swlb", version, about = "Survey-weighted likelihood bootstrap")]
struct Cli {
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, global = true, env = "SWLB_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model to a CSV survey sample and report estimates with intervals.
    Fit(FitArgs),
    /// Run a Monte Carlo scenario and write a JSON (and CSV) report.
    Simulate(SimulateArgs),
    /// Check the mean and variance conditions of a resampling scheme.
    CheckWeights(CheckWeightsArgs),
    /// List the bundled scenarios.
    Scenarios,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    GaussianMean,
    Probit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Pmle,
    Swlb,
    Unweighted,
    WlbNaive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pmle => Method::Pmle,
            MethodArg::Swlb => Method::Swlb,
            MethodArg::Unweighted => Method::Unweighted,
            MethodArg::WlbNaive => Method::WlbNaive,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    SurveyAdjusted,
    UniformDirichlet,
    DirichletCentered,
}

impl From<SchemeArg> for ResampleScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::SurveyAdjusted => ResampleScheme::SurveyAdjusted,
            SchemeArg::UniformDirichlet => ResampleScheme::UniformDirichlet,
            SchemeArg::DirichletCentered => ResampleScheme::DirichletCentered,
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: std::path::PathBuf,
    /// Column holding the raw sampling weights.
    #[arg(long)]
    weight_col: String,
    /// Response column. The Gaussian mean model may instead take a single
    /// covariate.
    #[arg(long)]
    response_col: Option<String>,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "pmle")]
    method: MethodArg,
    /// Bootstrap replicates (swlb and wlb-naive only).
    #[arg(long, default_value_t = 2000)]
    b: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Fit the probit model without an intercept.
    #[arg(long)]
    no_intercept: bool,
    /// Also report the PMLE and its sandwich standard errors.
    #[arg(long)]
    with_pmle: bool,
    /// Largest share of failed bootstrap replicates tolerated.
    #[arg(long, default_value_t = 0.01)]
    max_failures: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Bundled scenario name or path to a scenario TOML file.
    #[arg(long)]
    scenario: String,
    /// Comma-separated methods.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "pmle,swlb,wlb-naive,unweighted"
    )]
    methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    replications_override: Option<usize>,
    #[arg(long)]
    population_override: Option<usize>,
    #[arg(long)]
    sample_size_override: Option<usize>,
    #[arg(long)]
    bootstrap_override: Option<usize>,
    /// JSON report path; the CSV goes next to it with a `.csv` extension.
    /// Without it the JSON goes to stdout.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct CheckWeightsArgs {
    /// Comma-separated raw weights, scaled to sum to their count.
    #[arg(long, value_delimiter = ',', required = true)]
    weights: Vec<f64>,
    /// Repeat the weight pattern to this length.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "survey-adjusted")]
    scheme: SchemeArg,
    /// Number of draws M (at least 1000).
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo standard errors allowed between estimate and target.
    #[arg(long, default_value_t = 4.0)]
    z_threshold: f64,
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

fn fail(err: &Error) -> ExitCode {
    let kind = if err.is_numerical() { "numerical" } else { "input" };
    let body = serde_json::json!({ "error": { "kind": kind, "message": err.to_string() } });
    eprintln!("{body}");
    ExitCode::from(if err.is_numerical() { 3 } else { 2 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        return fail(&Error::InvalidConfig(format!("thread pool: {e}")));
    }
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::CheckWeights(a) => commands::check_weights(a),
        Command::Scenarios => {
            for (name, _) in scenario::BUNDLED {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
