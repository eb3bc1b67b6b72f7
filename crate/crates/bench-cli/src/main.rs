//! Benchmark driver for the predictive-beamforming testbed.
//!
//! Subcommands:
//! * `run`    — Monte Carlo over seeded trials; writes `tracks.csv`,
//!   `angle_cdf.csv`, `rate_cdf.csv` and `summary.json` into `--out`.
//! * `single` — one verbose trial for debugging.
//! * `cdf`    — recompute the CDF files from an existing `tracks.csv`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use beamtrack_core::config::ScenarioConfig;
use beamtrack_core::montecarlo::{aggregate, run_monte_carlo};
use beamtrack_core::report::{cdfs_from_tracks, emit_outputs, prepare_out_dir};
use beamtrack_core::sim::{run_trial, Scheme};

#[derive(Parser)]
#[command(
    name = "beamtrack",
    about = "Vehicle tracking and predictive beamforming benchmark",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo benchmark and write CSV/JSON outputs.
    Run {
        /// Scenario configuration file (flat `key = value`; defaults apply
        /// to missing keys).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for tracks.csv, angle_cdf.csv, rate_cdf.csv and
        /// summary.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override both RSU array sizes (transmit and receive).
        #[arg(long)]
        antennas: Option<usize>,
    },
    /// Run one trial and print a per-step table.
    Single {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Trial index within the seed's stream.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        antennas: Option<usize>,
    },
    /// Recompute angle/rate CDF files from an existing tracks.csv.
    Cdf {
        /// Path to a tracks.csv produced by `run`.
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Antenna count written into the CDF label column.
        #[arg(long, default_value_t = 64)]
        antennas: usize,
    },
}

fn load_config(
    path: &Option<PathBuf>,
    seed: Option<u64>,
    trials: Option<usize>,
    antennas: Option<usize>,
) -> Result<ScenarioConfig, beamtrack_core::Error> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(a) = antennas {
        cfg.n_tx = a;
        cfg.n_rx = a;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), beamtrack_core::Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            antennas,
        } => {
            let cfg = load_config(&config, seed, trials, antennas)?;
            prepare_out_dir(&out)?;
            let output = run_monte_carlo(&cfg)?;
            let files = emit_outputs(&output, &out)?;
            let agg = aggregate(&output);
            println!(
                "ran {} trials, {} antennas, {} steps, {} vehicles",
                agg.trials, cfg.n_tx, cfg.n_steps, cfg.n_vehicles
            );
            for scheme in Scheme::ALL {
                let s = agg.scheme(scheme);
                println!(
                    "  {:9} final-step angle error p50 {:.4} deg, mean rate {:.3} bps/Hz",
                    scheme.name(),
                    s.final_step_angle_error_q50_deg,
                    s.mean_rate_bps_hz
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Single {
            config,
            seed,
            trial,
            antennas,
        } => {
            let cfg = load_config(&config, seed, None, antennas)?;
            let rec = run_trial(&cfg, trial)?;
            println!(
                "trial {trial}: seed {}, {} antennas, {} vehicles x {} steps",
                cfg.seed, cfg.n_tx, cfg.n_vehicles, cfg.n_steps
            );
            println!(
                "{:>4} {:>3} | {:>9} {:>9} {:>7} | {:>9} {:>9} {:>9}",
                "step", "veh", "theta", "range", "speed", "prop_err", "ekf_err", "fb_err"
            );
            for row in &rec.rows {
                println!(
                    "{:>4} {:>3} | {:>9.4} {:>9.3} {:>7.3} | {:>9.5} {:>9.5} {:>9.5}",
                    row.step,
                    row.vehicle,
                    row.theta_true.to_degrees(),
                    row.d_true,
                    row.v_true,
                    row.proposed.angle_error_deg(row.theta_true),
                    row.ekf.angle_error_deg(row.theta_true),
                    row.feedback.angle_error_deg(row.theta_true),
                );
            }
            println!("diagnostics: {:?}", rec.diagnostics);
        }
        Command::Cdf {
            tracks,
            out,
            antennas,
        } => {
            for f in cdfs_from_tracks(&tracks, &out, antennas)? {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
