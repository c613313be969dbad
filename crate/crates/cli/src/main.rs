//! `wfmr`: command-line front end for wavelet-based functional mixture
//! regression.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wfmr::error::ErrorKind;
use wfmr::Error;

#[derive(Parser, Debug)]
#[command(name = "wfmr", version, about = "Wavelet-based scalar-on-function mixture regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the wavelet design matrix of a curve table.
    Transform(TransformArgs),
    /// Generate a synthetic data set.
    Simulate(SimulateArgs),
    /// Fit a penalized mixture model.
    Fit(FitArgs),
    /// Select C, j0 and lambda by cross-validation or BIC.
    Tune(TuneArgs),
    /// Assign groups and predict responses with a saved model.
    Predict(PredictArgs),
    /// Leave-one-out relative prediction error of a fitting protocol.
    Cvrpe(CvrpeArgs),
    /// Write estimated coefficient functions for plotting.
    ExportPlot(ExportPlotArgs),
}

#[derive(Args, Debug, Clone)]
struct WaveletArgs {
    /// Wavelet family: haar or sym8.
    #[arg(long, default_value = "sym8")]
    wavelet: String,
    /// Coarsest decomposition level.
    #[arg(long, default_value_t = 0)]
    j0: usize,
    /// Resample curves onto this many equally spaced points (power of two).
    #[arg(long)]
    resample: Option<usize>,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// smooth or bumpy.
    #[arg(long)]
    family: String,
    /// Sampling points per curve.
    #[arg(long = "N")]
    n_points: usize,
    /// Number of observations.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r2: f64,
    /// Number of mixture components (1 or 2).
    #[arg(long = "C", default_value_t = 2)]
    components: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; `<out>.truth.json` receives the seed, true labels and coefficient functions.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct FitOptions {
    /// Use adaptive penalty weights from a first-stage fit.
    #[arg(long)]
    adaptive: bool,
    /// Exponent on the mixing proportions in the penalty (0, 0.5 or 1).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "C")]
    components: usize,
    /// Penalty level, or `max` for the smallest all-zero penalty.
    #[arg(long, allow_hyphen_values = true)]
    lambda: String,
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[command(flatten)]
    options: FitOptions,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// cv5, cvK (K folds) or bic.
    #[arg(long)]
    rule: String,
    /// 1: select lambda; 2: select C and lambda; 3: select j0 and lambda.
    #[arg(long)]
    scenario: u32,
    /// Number of components where the scenario fixes it.
    #[arg(long = "C", default_value_t = 2)]
    components: usize,
    /// Number of automatic lambda values per (C, j0).
    #[arg(long, default_value_t = 100)]
    n_lambda: usize,
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[command(flatten)]
    options: FitOptions,
    /// Also refit the selected cell on all data and save it here.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    /// max-resp, threshold:T or threshold:T:BELOW:ABOVE.
    #[arg(long, default_value = "max-resp")]
    rule: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CvrpeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "C")]
    components: usize,
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    #[command(flatten)]
    wavelet: WaveletArgs,
    #[command(flatten)]
    options: FitOptions,
    /// max-resp, threshold:T or threshold:T:BELOW:ABOVE.
    #[arg(long, default_value = "max-resp")]
    rule: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportPlotArgs {
    #[arg(long)]
    model: PathBuf,
    /// Multiply by the number of sampling points, giving the coefficient
    /// function on the scale of the integral model.
    #[arg(long)]
    riemann: bool,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn report(kind: &str, code: u8, message: String) -> ExitCode {
    let body = json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("WFMR_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("WFMR_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("usage", 2, e.to_string().trim().to_string()),
    };
    let outcome = configure_threads().and_then(|()| match cli.command {
        Command::Transform(a) => commands::transform(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Tune(a) => commands::tune(a),
        Command::Predict(a) => commands::predict(a),
        Command::Cvrpe(a) => commands::cvrpe(a),
        Command::ExportPlot(a) => commands::export_plot(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            let name = match kind {
                ErrorKind::Usage => "usage",
                ErrorKind::Data => "data",
                ErrorKind::Numerical => "numerical",
            };
            report(name, exit_code(kind), e.to_string())
        }
    }
}
