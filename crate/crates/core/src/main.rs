use bosegas::config::parse_config;
use bosegas::parallel;
use bosegas::runner::{self, RunOverrides, Subcommand};
use clap::{Args, Parser, Subcommand as ClapSubcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bosegas",
    version,
    about = "Energy bounds for a dilute Bose gas with partially attractive pair potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config file
    #[arg(long)]
    config: PathBuf,
    /// Output path (overrides output_path from the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Solve the zero-energy profile and write (r, u, f) plus a summary line
    Scatter {
        #[command(flatten)]
        common: Common,
        /// Integration steps for the radial solve
        #[arg(long)]
        n_steps: Option<usize>,
    },
    /// Check the lower-bound hypotheses; exit 1 when they fail
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
    },
    /// Variational upper bound over the (density, seed) grid
    Upper {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        n_burn_in: Option<usize>,
    },
    /// Analytic lower-bound report per density
    Lower {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        const_c: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Upper bound plus lower-bound columns in one CSV
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        n_burn_in: Option<usize>,
    },
}

fn main() -> ExitCode {
    parallel::configure_threads_from_env();
    let cli = Cli::parse();
    let (sub, common, overrides) = match cli.command {
        Command::Scatter { common, n_steps } => (
            Subcommand::Scatter,
            common,
            RunOverrides {
                n_steps,
                ..Default::default()
            },
        ),
        Command::Check { common, t, c1, c2 } => (
            Subcommand::Check,
            common,
            RunOverrides {
                t,
                c1,
                c2,
                ..Default::default()
            },
        ),
        Command::Upper {
            common,
            n_samples,
            n_burn_in,
        } => (
            Subcommand::Upper,
            common,
            RunOverrides {
                n_samples,
                n_burn_in,
                ..Default::default()
            },
        ),
        Command::Lower { common, const_c, t } => (
            Subcommand::Lower,
            common,
            RunOverrides {
                const_c,
                t,
                ..Default::default()
            },
        ),
        Command::Sweep {
            common,
            n_samples,
            n_burn_in,
        } => (
            Subcommand::Sweep,
            common,
            RunOverrides {
                n_samples,
                n_burn_in,
                ..Default::default()
            },
        ),
    };

    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", common.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            eprint!("{errors}");
            return ExitCode::from(2);
        }
    };
    let overrides = RunOverrides {
        out: common.out,
        ..overrides
    };
    match runner::run(&cfg, sub, &overrides) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
