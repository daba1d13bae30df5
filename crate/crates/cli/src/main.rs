//! `wulff-spectra` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 solver failure, 4 oracle mismatch.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wulff_spectra::gauge::{Gauge, GaugeSpec};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "wulff-spectra",
    version,
    about = "First nonlocal eigenvalues on Wulff sets and their saturation curve"
)]
pub struct Cli {
    /// Space dimension.
    #[arg(long, global = true, default_value_t = 2)]
    pub n: usize,
    /// Gauge: `euclidean`, `p:<p>` or `ellipse:<a>,<b>,<c>` (2-D only).
    #[arg(long, global = true, default_value = "euclidean")]
    pub gauge: String,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance override for iterative solvers.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for randomized restarts and sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Emit JSON instead of plain text / CSV.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Minimum eigenvalue over Wulff pairs as a function of the weight.
    Curve(CurveArgs),
    /// Critical weight of the saturation transition, with its limit check.
    CriticalAlpha,
    /// Zero-average eigenvalue on a pair of Wulff sets.
    Twisted(PairArgs),
    /// Nonlocal eigenvalue on a pair of Wulff sets.
    EigPair(EigPairArgs),
    /// Grid minimization of the discrete Rayleigh quotient in 2-D.
    Grid2d(Grid2dArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    /// Total volume, or `auto` for the volume of the unit Wulff set.
    #[arg(long, default_value = "auto")]
    pub volume: String,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 120)]
    pub steps: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PairArgs {
    #[arg(long)]
    pub r1: f64,
    #[arg(long)]
    pub r2: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EigPairArgs {
    #[arg(long)]
    pub r1: f64,
    #[arg(long)]
    pub r2: f64,
    #[arg(long)]
    pub alpha: f64,
    /// Also solve the radial finite-volume problem with this many nodes per set.
    #[arg(long)]
    pub fd_nodes: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct Grid2dArgs {
    /// `disk`, `square` or `file:<path>`.
    #[arg(long, default_value = "disk")]
    pub domain: String,
    /// Area of the disk or square.
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub area: f64,
    /// Mesh size (ignored for mask files).
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub h: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Sweep `alpha` up to this value instead of a single solve.
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Write the eigenfunction as CSV `i,j,x,y,u`.
    #[arg(long)]
    pub eigenfunction: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Run only the named suites.
    #[arg(long)]
    pub suite: Vec<String>,
    /// Relative perturbation of kappa_n applied to the closed-form side
    /// (sensitivity check of the suites).
    #[arg(long, hide = true, default_value_t = 0.0)]
    pub perturb_kappa: f64,
}

#[derive(Debug)]
pub enum CliError {
    Verify(String),
    Config(String),
    Solver(String),
    Oracle(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Oracle(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Verify(m)
            | CliError::Config(m)
            | CliError::Solver(m)
            | CliError::Oracle(m) => m,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Validated global settings shared by all commands.
pub struct Context {
    pub n: usize,
    pub gauge: Gauge,
    pub gauge_spec: GaugeSpec,
    pub kappa_n: f64,
}

impl Context {
    fn new(cli: &Cli) -> CliResult<Self> {
        if cli.n < 2 {
            return Err(CliError::Config(format!("--n must be >= 2, got {}", cli.n)));
        }
        if let Some(t) = cli.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("--tol must be positive, got {t}")));
            }
        }
        let gauge_spec: GaugeSpec = cli
            .gauge
            .parse()
            .map_err(|e| CliError::Config(format!("--gauge: {e}")))?;
        let gauge = gauge_spec
            .build(cli.n)
            .map_err(|e| CliError::Config(format!("--gauge: {e}")))?;
        let kappa_n = gauge.wulff_measure().kappa_n;
        Ok(Self {
            n: cli.n,
            gauge,
            gauge_spec,
            kappa_n,
        })
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("WULFF_SPECTRA_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Config(format!(
            "WULFF_SPECTRA_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    let ctx = Context::new(cli)?;
    match &cli.command {
        Command::Curve(a) => commands::curve(cli, &ctx, a),
        Command::CriticalAlpha => commands::critical_alpha(cli, &ctx),
        Command::Twisted(a) => commands::twisted(cli, &ctx, a),
        Command::EigPair(a) => commands::eig_pair(cli, &ctx, a),
        Command::Grid2d(a) => commands::grid2d(cli, &ctx, a),
        Command::Verify(a) => verify::run(cli, &ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
