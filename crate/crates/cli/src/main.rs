use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use pareto_trace_cli::artifacts::FileRecord;
use pareto_trace_cli::pipeline::{run_front, run_mix, run_sample, run_subspace, run_trace};
use pareto_trace_cli::{run_pipeline, CliError, ConfigArgs};

/// Active-subspace Pareto tracing for two competing objectives.
#[derive(Debug, Parser)]
#[command(name = "trace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every stage in sequence, plus manifest.json.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Samples and forward-difference gradients of both objectives.
    Sample {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Gradient outer-product spectra.
    Subspace {
        #[command(flatten)]
        config: ConfigArgs,
        /// Gradient files named gradients_<label>.csv (default: both under --in).
        #[arg(long)]
        gradients: Vec<PathBuf>,
        /// Directory holding earlier stage outputs (default: the output directory).
        #[arg(long = "in", value_name = "DIR")]
        input: Option<PathBuf>,
    },
    /// Geodesic subspace mixing and quadratic ridge fits.
    Mix {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "DIR")]
        input: Option<PathBuf>,
    },
    /// Closed-form and ODE Pareto traces and the projected domain.
    Trace {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "DIR")]
        input: Option<PathBuf>,
    },
    /// True-model values over inactive fibers along a trace, and the sample front.
    Front {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "DIR")]
        input: Option<PathBuf>,
        /// Trace file (default: trace.csv under --in).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn report(files: &[FileRecord]) {
    for f in files {
        println!("{}  {}", f.sha256, f.name);
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = config.resolve()?;
            let manifest = run_pipeline(&cfg)?;
            report(&manifest.files);
            println!(
                "wrote {} files to {}",
                manifest.files.len() + 1,
                cfg.out_dir().display()
            );
        }
        Command::Sample { config } => report(&run_sample(&config.resolve()?)?),
        Command::Subspace {
            config,
            gradients,
            input,
        } => {
            let cfg = config.resolve()?;
            let input = input.unwrap_or_else(|| cfg.out_dir());
            report(&run_subspace(&cfg, &input, &gradients)?);
        }
        Command::Mix { config, input } => {
            let cfg = config.resolve()?;
            report(&run_mix(&cfg, &input.unwrap_or_else(|| cfg.out_dir()))?);
        }
        Command::Trace { config, input } => {
            let cfg = config.resolve()?;
            let (files, ode) = run_trace(&cfg, &input.unwrap_or_else(|| cfg.out_dir()))?;
            report(&files);
            match (ode.max_deviation, ode.error) {
                (Some(d), _) => println!(
                    "ODE ({} steps) vs closed form: max deviation {d:.3e}",
                    ode.steps
                ),
                (None, Some(e)) => println!("ODE trace failed: {e}"),
                _ => {}
            }
        }
        Command::Front {
            config,
            input,
            trace,
        } => {
            let cfg = config.resolve()?;
            let input = input.unwrap_or_else(|| cfg.out_dir());
            report(&run_front(&cfg, &input, trace.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
