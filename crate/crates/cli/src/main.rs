//! `skillscore` command-line frontend.
//!
//! Exit codes: 0 success, 1 usage, 2 data or parse error, 3 degenerate
//! statistics (constant series, perfect reference).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skillscore::calibration::Scheme;
use skillscore::metrics::Normalizer;

#[derive(Debug, Parser)]
#[command(
    name = "skillscore",
    version,
    about = "Forecast verification with potential skill scores"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score forecasts: error metrics, actual and potential skill.
    Score(ScoreArgs),
    /// Fit a linear calibration and append the calibrated column.
    Calibrate(CalibrateArgs),
    /// Evaluate many forecasts, mark the MAE/RMSE Pareto front.
    Ensemble(EnsembleArgs),
    /// Write a seeded synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "obs")]
    pub obs_col: String,
    /// Comma-separated; defaults to every column except the observation and `time`.
    #[arg(long, value_delimiter = ',')]
    pub fcst_cols: Vec<String>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    /// `mean` or `capacity:<value>`.
    #[arg(long, default_value = "mean", value_parser = parse_normalizer)]
    pub normalize: Normalizer,
    /// Drop rows whose observation is below this value.
    #[arg(long)]
    pub qc_min_obs: Option<f64>,
}

fn parse_normalizer(raw: &str) -> Result<Normalizer, String> {
    if raw == "mean" {
        return Ok(Normalizer::Mean);
    }
    let value = raw
        .strip_prefix("capacity:")
        .ok_or_else(|| format!("expected `mean` or `capacity:<value>`, got `{raw}`"))?;
    match value.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Normalizer::Fixed(v)),
        _ => Err(format!("capacity must be a positive number, got `{value}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Scheme,
    /// Format of the coefficient report.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Calibrated table; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_scheme(raw: &str) -> Result<Scheme, String> {
    raw.parse().map_err(|e: skillscore::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Scatter CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.8, allow_hyphen_values = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.8)]
    pub rho_target: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub bias: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub gain: f64,
    /// Extra ensemble members perturbed from the base forecast.
    #[arg(long, default_value_t = 0)]
    pub members: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<skillscore::Error> for Failure {
    fn from(e: skillscore::Error) -> Self {
        use skillscore::Error;
        let code = match e {
            Error::Degenerate(_) => 3,
            Error::InvalidParameter(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Score(args) => commands::run_score(&args),
        Command::Calibrate(args) => commands::run_calibrate(&args),
        Command::Ensemble(args) => commands::run_ensemble(&args),
        Command::Synth(args) => commands::run_synth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
