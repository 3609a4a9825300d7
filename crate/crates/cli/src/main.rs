use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

/// Verify k-symplectic and k-contact Hamiltonian field theories and simulate
/// the vibrating string.
#[derive(Debug, Parser)]
#[command(name = "kfield", version)]
pub struct Cli {
    /// Seed for random probe points.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Number of probe points.
    #[arg(long, global = true, default_value_t = 50)]
    pub probes: usize,

    /// Tolerance override for the command's pass/fail check.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Directory for reports and CSV output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the components of the Hamiltonian k-vector field.
    Kvf {
        system: PathBuf,
        /// TOML file with a `[gauge]` table overriding the system's gauge.
        #[arg(long)]
        gauge: Option<PathBuf>,
    },
    /// Structural checks and HDW residuals at probe points.
    Check {
        system: PathBuf,
        /// Check the contactification of a k-symplectic system instead.
        #[arg(long)]
        contactify: bool,
        #[arg(long)]
        gauge: Option<PathBuf>,
    },
    /// Contactify, solve, project and verify the k-symplectic equations.
    Bridge {
        system: PathBuf,
        /// Also analyse the damped lift `h + gamma*z1`.
        #[arg(long, value_name = "GAMMA", allow_negative_numbers = true)]
        negative: Option<f64>,
        #[arg(long)]
        gauge: Option<PathBuf>,
    },
    /// Simulate the vibrating string from a TOML configuration.
    Simulate {
        config: PathBuf,
        /// Compare against the analytic standing wave of this mode.
        #[arg(long, value_name = "MODE")]
        reference: Option<u32>,
        /// Run a refinement study with this many levels.
        #[arg(long, value_name = "LEVELS")]
        convergence: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
