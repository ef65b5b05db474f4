//! `rigidity`: batch driver for homogeneous order-one experiments.
//!
//! Every subcommand writes a JSON report (version, resolved configuration,
//! result, wall time) to stdout or `--output`. Exit status: 0 on success,
//! 1 when a requested check fails, 2 on configuration errors and on inputs at
//! which the requested quantity is undefined.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use config::{FileConfig, Resolved};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    /// The computation is undefined for the given inputs.
    Input(rigidity_core::Error),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Input(e) => write!(f, "invalid input: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<rigidity_core::Error> for CliError {
    fn from(e: rigidity_core::Error) -> Self {
        match e {
            rigidity_core::Error::UnknownProfile(_) => CliError::Config(e.to_string()),
            other => CliError::Input(other),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rigidity",
    version,
    about = "Homogeneous order-one solutions: experiments and checks"
)]
struct Cli {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Hessian of a profile at a point, with its tangential classification.
    Hessian(HessianArgs),
    /// Gradient-surface dump (CSV) and optional single-point geometry.
    Surface(SurfaceArgs),
    /// Saddle scan, singular-set refinement, supporting-plane probe, leading polynomial.
    Scan(ScanArgs),
    /// Residual of the Lawson-Osserman cone and its coefficient certificate.
    VerifyLo(VerifyLoArgs),
    /// Pointwise coefficient synthesis on a sphere grid.
    Synthesize(SynthesizeArgs),
    /// Chart and spherical reductions of a coefficient field at a point.
    Reduce(ReduceArgs),
    /// Minimize the discrete residual of the spherical operator.
    Search(SearchArgs),
    /// Synthesis certificates across grid resolutions (CSV: N, lambda, infeasible_count).
    Obstruction(ObstructionArgs),
    /// Registry of bundled profiles with formulas and references.
    ListProfiles(ListArgs),
}

#[derive(Args)]
pub struct HessianArgs {
    #[arg(long)]
    pub profile: Option<String>,
    /// Point in R^n, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Args)]
pub struct SurfaceArgs {
    #[arg(long)]
    pub profile: Option<String>,
    /// Resolution N of the N x N/2 grid.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Also report the full surface geometry at this point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,
    /// Surface dump destination.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Grid doublings of the singular-set refinement.
    #[arg(long)]
    pub refinements: Option<usize>,
    /// Normal of the supporting-plane probe.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub nu: Option<Vec<f64>>,
    /// Angles (theta1, theta2) for the leading-polynomial fit.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub leading: Option<Vec<f64>>,
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Args)]
pub struct VerifyLoArgs {
    /// Points per angle of the S^3 grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Maximum number of sampled points.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Check threshold for the residual.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Feasibility map destination.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Sampled coefficient field destination (JSON).
    #[arg(long)]
    pub field_json: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReduceArgs {
    /// `identity`, `synthesized` (needs --profile) or `random:<seed>`.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub profile: Option<String>,
    /// Chart point (x1, x2) on x3 = 1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub chart: Option<Vec<f64>>,
    /// Spherical angles (theta1, theta2).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Ellipticity of random fields.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Args)]
pub struct SearchArgs {
    /// `identity` or `random:<seed>`.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Seeds of the random initial profiles.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `inverse-iteration` or `gradient-descent`.
    #[arg(long)]
    pub method: Option<String>,
    /// `spectral` or `fourth-order`.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub shift: Option<f64>,
    /// Fail (exit 1) if a minimizer is farther than this from the linear functions.
    #[arg(long)]
    pub max_nonlinearity: Option<f64>,
    /// Iteration history destination.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct ObstructionArgs {
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub grids: Option<Vec<usize>>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct ListArgs {
    /// JSON instead of tab-separated lines.
    #[arg(long)]
    pub json: bool,
}

/// Outcome of a subcommand: the result payload and whether its check passed.
pub struct Outcome {
    pub result: Value,
    pub check_passed: bool,
}

impl Outcome {
    pub fn ok<T: Serialize>(result: &T) -> Result<Self, CliError> {
        Self::checked(result, true)
    }

    pub fn checked<T: Serialize>(result: &T, check_passed: bool) -> Result<Self, CliError> {
        let result = serde_json::to_value(result).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Outcome { result, check_passed })
    }
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    version: &'a str,
    config: std::collections::BTreeMap<String, Value>,
    check_passed: bool,
    result: Value,
    wall_time_s: f64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RIGIDITY_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("RIGIDITY_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let output = cli.output.clone().or_else(|| file.output.clone());

    let name = match &cli.command {
        Command::Hessian(_) => "hessian",
        Command::Surface(_) => "surface",
        Command::Scan(_) => "scan",
        Command::VerifyLo(_) => "verify-lo",
        Command::Synthesize(_) => "synthesize",
        Command::Reduce(_) => "reduce",
        Command::Search(_) => "search",
        Command::Obstruction(_) => "obstruction",
        Command::ListProfiles(args) => {
            let text = commands::list_profiles(args.json)?;
            commands::emit(output.as_deref(), &text)?;
            return Ok(true);
        }
    };

    let start = Instant::now();
    let mut resolved = Resolved::default();
    let outcome = match cli.command {
        Command::Hessian(a) => commands::hessian(a, &file, &mut resolved),
        Command::Surface(a) => commands::surface(a, &file, &mut resolved),
        Command::Scan(a) => commands::scan(a, &file, &mut resolved),
        Command::VerifyLo(a) => commands::verify_lo(a, &file, &mut resolved),
        Command::Synthesize(a) => commands::synthesize(a, &file, &mut resolved),
        Command::Reduce(a) => commands::reduce(a, &file, &mut resolved),
        Command::Search(a) => commands::search(a, &file, &mut resolved),
        Command::Obstruction(a) => commands::obstruction(a, &file, &mut resolved),
        Command::ListProfiles(_) => unreachable!("handled above"),
    }?;
    let report = Report {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        config: resolved.into_echo(),
        check_passed: outcome.check_passed,
        result: outcome.result,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    commands::emit(output.as_deref(), &text)?;
    Ok(outcome.check_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("rigidity: {e}");
            ExitCode::from(2)
        }
    }
}
