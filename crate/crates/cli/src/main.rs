use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracross::commands::{
    cmd_continuation, cmd_rate, cmd_run, cmd_twin, cmd_verify_ops, RateOutcome,
};
use fracross::output::fmt_f64;

/// Pseudo-spectral simulator for multi-species fractional cross-diffusion
/// with entropy diagnostics.
#[derive(Parser)]
#[command(name = "fracross", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration and write diagnostics.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides FRACROSS_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the fractional-operator property suite and write report.json.
    VerifyOps {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Base vs perturbed trajectory on a shared time grid.
    Twin {
        #[arg(long)]
        config: PathBuf,
        /// JSON perturbation spec: {"species": 0, "mode": [2], "amplitude": 1e-3}.
        #[arg(long)]
        perturb: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parameter continuation toward the limit system.
    Continuation {
        #[arg(long)]
        config: PathBuf,
        /// JSON array of cascade parameter entries.
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit an exponential rate on a finished run's H_rel column.
    Rate {
        /// Path to a diagnostics.csv.
        csv: PathBuf,
        /// Fit window T_A:T_B.
        #[arg(long)]
        window: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed } => {
            cmd_run(&config, out.as_deref(), seed).map(|dir| {
                println!("run completed; outputs in {}", dir.display());
            })
        }
        Command::VerifyOps { config, out, seed } => {
            cmd_verify_ops(&config, out.as_deref(), seed).map(|dir| {
                println!("all operator checks passed; report in {}", dir.display());
            })
        }
        Command::Twin {
            config,
            perturb,
            out,
            seed,
        } => cmd_twin(&config, &perturb, out.as_deref(), seed).map(|dir| {
            println!("twin experiment completed; outputs in {}", dir.display());
        }),
        Command::Continuation {
            config,
            schedule,
            out,
            seed,
        } => cmd_continuation(&config, &schedule, out.as_deref(), seed).map(|dir| {
            println!("continuation study completed; outputs in {}", dir.display());
        }),
        Command::Rate { csv, window } => cmd_rate(&csv, &window).map(|outcome| match outcome {
            RateOutcome::Fit(fit) => {
                println!(
                    "rate {} r2 {} window {}:{} samples {}",
                    fmt_f64(fit.rate),
                    fmt_f64(fit.r2),
                    fmt_f64(fit.window.0),
                    fmt_f64(fit.window.1),
                    fit.samples
                );
            }
            RateOutcome::Converged { t, value } => {
                println!(
                    "converged: relative entropy {} at t = {} is below the resolvable floor",
                    fmt_f64(value),
                    fmt_f64(t)
                );
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracross: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
