//! `pxe`: command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 medium validation
//! failure, 3 solver failure. `manifest.json` is written on 0 and 3.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "pxe",
    version,
    about = "Paraxial wave propagation in rough media"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; falls back to PXE_WORKERS, then to the core count.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Skip the medium checks before solving.
    #[arg(long, global = true)]
    pub skip_validate: bool,
    /// Override a config leaf, e.g. `--set grid.N=128`.
    #[arg(long = "set", value_name = "PATH=VALUE", global = true)]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Solve all frequencies and synthesize time slices.
    Simulate,
    /// Evolve the initial field at one frequency.
    Evolve {
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 0.0)]
        z_from: f64,
        /// Defaults to the configured depth `Z`.
        #[arg(long)]
        z_to: Option<f64>,
        /// Macro steps over `[0, Z]`; defaults to the configured `n`.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        substeps: Option<usize>,
    },
    /// Sobolev norms and tail exponents of stored fields.
    Analyze {
        #[arg(required = true)]
        fields: Vec<PathBuf>,
    },
    /// Rough-versus-smooth regularity experiment.
    Inverse,
    /// Step ledger of the regularity bootstrap.
    Bootstrap {
        /// Data exponent, as a decimal or `p/q`.
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        /// Coefficient regularity in (0, 1), as a decimal or `p/q`.
        #[arg(long)]
        r: String,
    },
    /// Self-convergence of the product formula in the number of macro steps.
    Convergence {
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 32, 64])]
        n_list: Vec<usize>,
    },
    /// Check the medium against the coefficient assumptions.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run::run(&cli))
}
