//! `qgraph`: spectra, torus scans, theorem checks and interlacing suites for
//! quantum graphs read from graph files.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser, Debug)]
#[command(name = "qgraph", version, about = "Spectral and nodal analysis of quantum graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues with nodal counts, written to spectrum.csv.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Number of eigenvalues.
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Λ on a uniform grid over the torus of angles, written to lambda_scan.csv.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Partition size; defaults to the smallest valid value plus one.
        #[arg(long)]
        m: Option<usize>,
        /// Grid points per angle; defaults to 256 for one angle and 64 for two.
        #[arg(long)]
        grid: Option<usize>,
        /// Scan only angle `j` (1-based), holding the others at 0.
        #[arg(long)]
        line: Option<usize>,
    },
    /// Critical points of Λ reached from a grid of seeds, written to critical_points.csv.
    Critical {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        /// Seeds per angle.
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[command(flatten)]
        morse: MorseArgs,
    },
    /// Morse index against nodal deficiency, written to morse_report.csv.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        morse: MorseArgs,
        /// Also run the mixed minimax check and write minimax.csv.
        #[arg(long)]
        minimax: bool,
        /// Angle grid for the minimax scans.
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Interlacing under coupling changes and vertex identifications.
    Interlace {
        #[command(flatten)]
        common: Common,
        /// Largest eigenvalue index compared.
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Distribution of nodal deficiencies, written to deficiency_hist.csv.
    Histogram {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        range: Range,
    },
    /// Writes the bundled example graphs into a directory.
    Examples {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Graph file.
    graph: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Relative bisection tolerance for eigenvalues.
    #[arg(long)]
    tol_root: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct Range {
    #[arg(long, default_value_t = 1)]
    n_from: usize,
    #[arg(long, default_value_t = 12)]
    n_to: usize,
}

#[derive(Args, Debug, Clone)]
struct MorseArgs {
    /// Gradient norm accepted at a critical point.
    #[arg(long, default_value_t = 1e-8)]
    tol_grad: f64,
    /// Angle step for the Hessian.
    #[arg(long, default_value_t = 1e-4)]
    fd_step: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Tsv,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::Input(format!("--{name} must be positive, got {x}")))
    }
}

fn range(r: &Range) -> Result<(usize, usize), CliError> {
    if r.n_from == 0 || r.n_to < r.n_from {
        return Err(CliError::Input(format!("empty index range {}..={}", r.n_from, r.n_to)));
    }
    Ok((r.n_from, r.n_to))
}

fn run(cli: Cli) -> Result<(), CliError> {
    use commands as c;
    match cli.command {
        Command::Spectrum { common, count } => {
            if count == 0 {
                return Err(CliError::Input("--count must be at least 1".into()));
            }
            c::spectrum(&c::Context::new(&common)?, count)
        }
        Command::Scan { common, m, grid, line } => c::scan(&c::Context::new(&common)?, m, grid, line),
        Command::Critical { common, m, grid, morse } => {
            let ctx = c::Context::new(&common)?;
            c::critical(&ctx, m, grid.max(1), &c::morse_options(&ctx, &morse)?)
        }
        Command::Verify { common, range: r, morse, minimax, grid } => {
            let ctx = c::Context::new(&common)?;
            let mut opts = c::morse_options(&ctx, &morse)?;
            opts.grid = grid.max(2);
            c::verify(&ctx, range(&r)?, &opts, minimax)
        }
        Command::Interlace { common, count } => {
            if count == 0 {
                return Err(CliError::Input("--count must be at least 1".into()));
            }
            c::interlace(&c::Context::new(&common)?, count)
        }
        Command::Histogram { common, range: r } => c::histogram(&c::Context::new(&common)?, range(&r)?),
        Command::Examples { out } => c::examples(&out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qgraph: {e}");
            ExitCode::from(e.code())
        }
    }
}
