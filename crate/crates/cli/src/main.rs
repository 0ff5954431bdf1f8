use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coulomb3::config::{GoalSelector, RunConfig};
use coulomb3::observables::Eta;
use coulomb3::pipeline;
use coulomb3::Error;

/// Confined three-body Coulomb spectra, collision states and two-step pathways.
#[derive(Debug, Parser)]
#[command(name = "coulomb3", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assemble, diagonalize, verify and persist a spectrum.
    Spectrum {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Parent directory for the run directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify collision states of a stored spectrum.
    Collision {
        #[arg(long)]
        store: PathBuf,
        /// Absolute threshold, or `rel:<f>` relative to the largest p_QC.
        #[arg(long)]
        eta: Option<Eta>,
    },
    /// Rank intermediates for a two-step excitation of a goal state.
    Twostep {
        #[arg(long)]
        store: PathBuf,
        /// State index or `auto` (largest p_QC among excited states).
        #[arg(long)]
        goal: Option<GoalSelector>,
    },
    /// Tabulate the angle-averaged potential with and without the field term.
    Potential {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print unit conversion factors.
    Units {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also convert a magnetic field in tesla to the diamagnetic strength.
        #[arg(long)]
        tesla: Option<f64>,
    },
    /// Write |psi| on the (R, rho) plane at the grid angle nearest `theta`.
    Slice {
        #[arg(long)]
        store: PathBuf,
        /// State index or `auto`.
        #[arg(long, default_value = "auto")]
        index: GoalSelector,
        #[arg(long, default_value_t = FRAC_PI_2)]
        theta: f64,
    },
}

fn load_config(path: Option<&Path>) -> coulomb3::Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Error::InvalidInput(format!("cannot read config {}: {e}", p.display()))
            })?;
            RunConfig::parse(&text)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidInput(_) | Error::Domain(_) => 2,
        Error::Solver(_) => 3,
        Error::MissingStore(_) | Error::Format { .. } => 4,
        _ => 1,
    }
}

fn run(cli: Cli) -> coulomb3::Result<u8> {
    match cli.command {
        Command::Spectrum { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let run = pipeline::cmd_spectrum(&cfg, out.as_deref())?;
            let s = &run.solved;
            println!("store={}", run.dir.display());
            println!("states={}", s.spectrum.len());
            println!("method={}", s.spectrum.meta.method);
            println!("converged={}", s.spectrum.meta.converged);
            println!("max_residual={:e}", s.report.max_residual);
            println!("max_gram_deviation={:e}", s.report.max_gram_deviation);
            if !s.healthy() {
                eprintln!("error: spectrum failed convergence or verification gates");
                for f in &s.report.failures {
                    eprintln!("  {f}");
                }
                return Ok(3);
            }
        }
        Command::Collision { store, eta } => {
            let (path, report) = pipeline::cmd_collision(&store, eta)?;
            println!("table={}", path.display());
            println!("eta={}", report.eta);
            println!("collision_states={}", report.collision_state_indices.len());
            println!("any_below_excitation_floor={}", report.any_below_floor);
        }
        Command::Twostep { store, goal } => {
            let (path, ranking) = pipeline::cmd_twostep(&store, goal)?;
            println!("table={}", path.display());
            println!("goal={}", ranking.goal);
            if let Some(top) = ranking.rows.first() {
                println!("top_intermediate={} score={:e}", top.intermediate, top.score);
            }
        }
        Command::Potential { config, out } => {
            let cfg = load_config(config.as_deref())?;
            let path = pipeline::cmd_potential(&cfg, out.as_deref())?;
            println!("table={}", path.display());
        }
        Command::Units { config, tesla } => {
            let cfg = load_config(config.as_deref())?;
            print!("{}", pipeline::units_report(&cfg, tesla));
        }
        Command::Slice { store, index, theta } => {
            let path = pipeline::cmd_slice(&store, index, theta)?;
            println!("table={}", path.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
