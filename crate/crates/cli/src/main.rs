//! `pcgmub`: reproducible PCG unbiasedness scenarios.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 numerical check
//! failed.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcgmub_core::angle::parse_angle;
use pcgmub_core::config::{OutputFormat, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pcgmub",
    version,
    about = "Periodic coarse-grained MUB simulations"
)]
pub struct Cli {
    /// key = value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Result file (a directory for kl-histogram). Results go to stdout and
    /// the summary to stderr when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    /// Grid half extent, dimensionless.
    #[arg(long, global = true)]
    extent: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mask-period table for d = 2..10, checked against the reference rows.
    ReplayPeriods(BenchArgs),
    /// Prepare a bin eigenstate and measure along another direction.
    SimulateMub(SimulateArgs),
    /// KL divergence of random distributions against simulated maxima.
    KlHistogram(KlArgs),
    /// Unbiasedness index m of a pair of periods.
    CheckPair(CheckPairArgs),
    /// Periods of the {0, 2π/3, 4π/3} triple.
    Triple(TripleArgs),
    /// Randomized search for four mutually unbiased directions.
    SearchQuadruples(SearchArgs),
    /// Lens-stage composition and scaling factor.
    Optics(OpticsArgs),
}

fn angle_arg(s: &str) -> Result<f64, String> {
    parse_angle(s).map_err(|e| e.message)
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Pixel length, μm.
    #[arg(long)]
    pixel: Option<f64>,
    /// Wavelength, nm.
    #[arg(long)]
    wavelength: Option<f64>,
    /// Focal length, mm.
    #[arg(long)]
    focal: Option<f64>,
    /// Lens FrFT angle.
    #[arg(long, value_parser = angle_arg)]
    theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Pair,
    Triple,
    Alpha23,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum, default_value = "pair")]
    mode: Mode,
    #[arg(long)]
    d: Option<usize>,
    /// Measurement direction.
    #[arg(long, value_parser = angle_arg)]
    theta: Option<f64>,
    /// Preparation direction.
    #[arg(long = "theta-prime", value_parser = angle_arg)]
    theta_prime: Option<f64>,
    #[arg(long)]
    m: Option<u64>,
    /// Preparation bin; all bins when absent.
    #[arg(long)]
    k0: Option<usize>,
    /// Preparation period; the symmetric point when absent.
    #[arg(long = "t-prep")]
    t_prep: Option<f64>,
    /// Allowed deviation from 1/d.
    #[arg(long)]
    tol: Option<f64>,
    /// Simulate an m excluded by the unbiasedness condition.
    #[arg(long)]
    allow_excluded: bool,
    /// Preparation bin widths in pixels for alpha23, comma separated.
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<u32>>,
}

#[derive(Debug, Args)]
pub struct KlArgs {
    #[arg(long = "d-min", default_value_t = 2)]
    d_min: usize,
    #[arg(long = "d-max", default_value_t = 10)]
    d_max: usize,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CheckPairArgs {
    #[arg(long)]
    t: f64,
    #[arg(long = "t-prime")]
    t_prime: f64,
    /// Angle between the two directions.
    #[arg(long, value_parser = angle_arg)]
    theta: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TripleArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    m1: u64,
    #[arg(long, default_value_t = 1)]
    m2: u64,
    #[arg(long, default_value_t = 1)]
    m3: u64,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Trials per seed.
    #[arg(long)]
    samples: Option<u64>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Required minimum residual.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OpticsArgs {
    /// Comma separated stages: lens:<f_mm>:<z_mm> or reflect.
    #[arg(long, default_value = "lens:250:200,lens:250:200,reflect")]
    stages: String,
    #[command(flatten)]
    bench: BenchArgs,
}

/// Command failure mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Check(_) => 3,
        }
    }
}

impl From<pcgmub_core::error::Error> for Failure {
    fn from(e: pcgmub_core::error::Error) -> Self {
        use pcgmub_core::error::Error as E;
        match e {
            E::NonPositiveWidth(_)
            | E::InvalidGrid(_)
            | E::DegenerateAngle { .. }
            | E::IndexOutOfRange { .. }
            | E::InvalidMask(_)
            | E::InvalidM { .. }
            | E::ParallelDirections { .. }
            | E::ExcludedAngle(_)
            | E::OutOfRange(_)
            | E::Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn run_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.format = match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        };
    }
    if cli.out.is_some() {
        cfg.out.clone_from(&cli.out);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.grid_n {
        cfg.grid_n = n;
    }
    if cli.extent.is_some() {
        cfg.extent = cli.extent;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run_config(&cli).and_then(|cfg| match &cli.command {
        Command::ReplayPeriods(a) => commands::replay_periods(&cfg, a),
        Command::SimulateMub(a) => commands::simulate_mub(&cfg, a),
        Command::KlHistogram(a) => commands::kl_histogram(&cfg, a),
        Command::CheckPair(a) => commands::check_pair(&cfg, a),
        Command::Triple(a) => commands::triple(&cfg, a),
        Command::SearchQuadruples(a) => commands::search_quadruples(&cfg, a),
        Command::Optics(a) => commands::optics(&cfg, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Io(m) => eprintln!("i/o error: {m}"),
                Failure::Check(m) => eprintln!("check failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
