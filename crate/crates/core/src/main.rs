use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cca_traffic::output::{emit_outputs, replot};
use cca_traffic::scenario::{run, ExperimentConfig, ObstaclePlacement, OPEN_TOLLING};
use cca_traffic::verify::run_suites;
use cca_traffic::Result;

#[derive(Parser)]
#[command(name = "cca-traffic", version, about = "Multi-lane fuzzy cellular automaton traffic simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV files and plot.
    Run {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run the cartesian product of parameter lists, one subdirectory each.
    Sweep {
        /// Base config; swept fields are overwritten.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0, 1.5, 2.0])]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.2, 0.3])]
        p: Vec<f64>,
        /// Influence radii; -1 is open road tolling.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [10.0, 25.0, 50.0, OPEN_TOLLING])]
        rho: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values = ["none"])]
        obstacle: Vec<ObstaclePlacement>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run the built-in property suites.
    Verify,
    /// Re-render the plot from an output directory.
    Plot {
        /// Directory holding fundamental.csv and cc.csv.
        #[arg(long)]
        input: PathBuf,
        /// SVG file to write.
        #[arg(long)]
        out: PathBuf,
        /// Moving-average window for cc(t), in samples.
        #[arg(long, default_value_t = 1)]
        smooth: usize,
    },
}

fn run_one(cfg: &ExperimentConfig, out: &std::path::Path, threads: usize) -> Result<()> {
    let results = run(cfg, threads)?;
    emit_outputs(out, cfg, &results)?;
    println!("wrote {} repetitions to {}", results.len(), out.display());
    Ok(())
}

fn sweep_dir(lambda: f64, p: f64, rho: f64, obstacle: ObstaclePlacement) -> String {
    let rho = if rho == OPEN_TOLLING { "open".to_string() } else { rho.to_string() };
    format!("lambda{lambda}_p{p}_rho{rho}_obstacle-{}", obstacle.name())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, seed, out, threads } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            run_one(&cfg, &out, threads)?;
        }
        Command::Sweep { config, lambda, p, rho, obstacle, seed, out, threads } => {
            let base = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::default(),
            };
            for &l in &lambda {
                for &pp in &p {
                    for &r in &rho {
                        for &o in &obstacle {
                            let mut cfg = ExperimentConfig {
                                emission_rate: l,
                                long_fraction: pp,
                                influence_radius: r,
                                obstacle: o,
                                ..base.clone()
                            };
                            if let Some(seed) = seed {
                                cfg.seed = seed;
                            }
                            cfg.validate()?;
                            run_one(&cfg, &out.join(sweep_dir(l, pp, r, o)), threads)?;
                        }
                    }
                }
            }
        }
        Command::Verify => {
            let reports = run_suites()?;
            for r in &reports {
                println!("{r}");
            }
            return Ok(reports.iter().all(|r| r.passed));
        }
        Command::Plot { input, out, smooth } => replot(&input, &out, smooth)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
