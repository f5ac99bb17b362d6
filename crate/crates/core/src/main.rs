use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpc_detector::cli::{self, Overrides};
use qpc_detector::Result;

/// Quantum point contact photon detector: simulate traces and analyze them.
#[derive(Parser)]
#[command(name = "qpc-detector", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// key=value config file; flags below override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Conductance noise (2e²/h) for sweeps and exposures.
    #[arg(long, global = true, value_name = "SIGMA", allow_hyphen_values = true)]
    noise: Option<f64>,
    /// Illumination wavelength.
    #[arg(long, global = true, value_name = "NM", allow_hyphen_values = true)]
    wavelength: Option<f64>,
    /// Exposure length.
    #[arg(long, global = true, value_name = "S", allow_hyphen_values = true)]
    duration: Option<f64>,
    /// Step detection threshold (noise multiples).
    #[arg(long, global = true, value_name = "K", allow_hyphen_values = true)]
    threshold: Option<f64>,
    /// Step detection window (samples).
    #[arg(long, global = true, value_name = "N")]
    window: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Gate sweep and its differential conductance.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        v_start: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        v_end: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Photon exposure trace with truth events.
    Expose,
    /// Analysis report for a trace file (default: <out>/exposure.csv).
    Analyze { trace: Option<PathBuf> },
    /// Plot-ready data for the conductance, step-height and interval figures.
    ReproduceFigures,
}

fn run(args: Args) -> Result<Vec<PathBuf>> {
    let overrides = Overrides {
        seed: args.seed,
        out_dir: args.out,
        noise: args.noise,
        wavelength: args.wavelength,
        duration: args.duration,
        threshold: args.threshold,
        window: args.window,
    };
    let mut config = cli::load_config(args.config.as_deref(), &overrides)?;
    match args.command {
        Command::Sweep {
            v_start,
            v_end,
            points,
        } => {
            config.sweep.v_start = v_start.unwrap_or(config.sweep.v_start);
            config.sweep.v_end = v_end.unwrap_or(config.sweep.v_end);
            config.sweep.n_points = points.unwrap_or(config.sweep.n_points);
            config
                .sweep
                .validate()
                .map_err(|e| qpc_detector::Error::Config(e.to_string()))?;
            cli::cmd_sweep(&config)
        }
        Command::Expose => cli::cmd_expose(&config),
        Command::Analyze { trace } => {
            let path = trace.unwrap_or_else(|| config.out_dir.join(cli::EXPOSURE_FILE));
            cli::cmd_analyze(&config, &path)
        }
        Command::ReproduceFigures => cli::cmd_reproduce_figures(&config),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qpc-detector: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
