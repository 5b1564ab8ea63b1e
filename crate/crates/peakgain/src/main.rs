//! `peakgain`: bounds on the peak-to-peak (ℓ1) gain of SISO LTI systems.
//!
//! Exit codes: 0 success, 2 input validation, 3 numerical failure.

mod commands;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use peakgain_core::starnorm::{Multiplier, SweepSettings};

#[derive(Parser)]
#[command(name = "peakgain", version, about = "Peak-to-peak gain bounds for SISO LTI systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum MultiplierArg {
    Full,
    Diagonal,
}

#[derive(Args, Clone)]
pub struct SweepArgs {
    /// α grid points on (0, κ).
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Golden-section steps around the best grid cell.
    #[arg(long, default_value_t = 40)]
    pub refine: usize,
    /// S-procedure multiplier for the degree-2 LMI.
    #[arg(long, value_enum, default_value_t = MultiplierArg::Full)]
    pub multiplier: MultiplierArg,
}

impl SweepArgs {
    pub fn settings(&self) -> SweepSettings {
        SweepSettings {
            grid_points: self.grid,
            refine_iterations: self.refine,
            multiplier: match self.multiplier {
                MultiplierArg::Full => Multiplier::Full,
                MultiplierArg::Diagonal => Multiplier::Diagonal,
            },
            ..SweepSettings::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// ℓ1 norm by quadrature of |h(t)| with a certified tail.
    Exact {
        system: PathBuf,
        /// Relative tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Write the estimate as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star-norm upper bound from inescapable sets.
    Star {
        system: PathBuf,
        #[arg(long, default_value_t = 1)]
        degree: u32,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Print the full sweep table.
        #[arg(long)]
        verbose: bool,
        /// Write the sweep summary as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower bound from the bang-bang law u = sign(xᵀPB) with the optimal degree-1 P.
    Worstcase {
        system: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Defaults to ten slowest time constants.
        #[arg(long)]
        horizon: Option<f64>,
        /// Trajectory CSV (t, x1..xn, u, y).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Quadrature on [0, t0] plus a star-norm bound on the tail.
    Tailsplit {
        system: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long, default_value_t = 1)]
        degree: u32,
        /// Absolute tolerance of the head quadrature.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary of the certified set of a 2-state system as CSV (theta, x1, x2).
    Reachset {
        system: PathBuf,
        #[arg(long, default_value_t = 1)]
        degree: u32,
        #[arg(long, default_value_t = 360)]
        samples: usize,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// All methods with defaults, with the ordering lower ≤ exact ≤ upper checked.
    Report {
        system: PathBuf,
        /// Tail-split times; each adds a degree-1 and a degree-2 row.
        #[arg(long, num_args = 1..)]
        t0: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Exact { system, tol, out } => commands::exact(&system, tol, out.as_deref()),
        Command::Star {
            system,
            degree,
            sweep,
            verbose,
            out,
        } => commands::star(&system, degree, &sweep, verbose, out.as_deref()),
        Command::Worstcase {
            system,
            dt,
            horizon,
            out,
            sweep,
        } => commands::worstcase(&system, dt, horizon, out.as_deref(), &sweep),
        Command::Tailsplit {
            system,
            t0,
            degree,
            tol,
            sweep,
            out,
        } => commands::tailsplit(&system, t0, degree, tol, &sweep, out.as_deref()),
        Command::Reachset {
            system,
            degree,
            samples,
            out,
            sweep,
        } => commands::reachset(&system, degree, samples, out.as_deref(), &sweep),
        Command::Report {
            system,
            t0,
            out,
            sweep,
        } => commands::report(&system, &t0, out.as_deref(), &sweep),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
