//! Plot-ready file outputs: per-step tracks, empirical CDFs and a JSON
//! summary.
//!
//! All files are byte-stable for a fixed `(config, seed)`: rows are ordered
//! by (trial, step, vehicle, scheme) and floats are written in Rust's
//! shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::metrics::compute_cdf;
use crate::montecarlo::{aggregate, Aggregates, MonteCarloOutput};
use crate::sim::{Scheme, TrialDiagnostics};

pub const TRACKS_HEADER: [&str; 11] = [
    "trial",
    "step",
    "vehicle",
    "scheme",
    "theta_true_deg",
    "theta_est_deg",
    "d_true",
    "d_est",
    "v_true",
    "v_est",
    "rate",
];
pub const ANGLE_CDF_HEADER: [&str; 4] = ["scheme", "antennas", "error_deg", "cdf"];
pub const RATE_CDF_HEADER: [&str; 4] = ["scheme", "antennas", "rate_bps_hz", "cdf"];

/// One parsed row of `tracks.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRow {
    pub trial: u64,
    pub step: usize,
    pub vehicle: usize,
    pub scheme: String,
    pub theta_true_deg: f64,
    pub theta_est_deg: f64,
    pub d_true: f64,
    pub d_est: f64,
    pub v_true: f64,
    pub v_est: f64,
    pub rate: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ScenarioConfig,
    antennas: usize,
    trials: usize,
    proposed: SchemeSummary,
    ekf: SchemeSummary,
    feedback: SchemeSummary,
    proposed_rate_95pct_fraction: f64,
    perfect_rate_bps_hz: f64,
    diagnostics: TrialDiagnostics,
}

#[derive(Serialize)]
struct SchemeSummary {
    angle_rmse_deg: f64,
    final_step_angle_rmse_deg: f64,
    final_step_angle_error_q20_deg: f64,
    final_step_angle_error_q50_deg: f64,
    final_step_angle_error_q80_deg: f64,
    mean_rate_bps_hz: f64,
    mean_sum_rate_bps_hz: f64,
}

impl SchemeSummary {
    fn from_aggregate(a: &crate::montecarlo::SchemeAggregate) -> Self {
        SchemeSummary {
            angle_rmse_deg: a.angle_rmse_deg,
            final_step_angle_rmse_deg: a.final_step_angle_rmse_deg,
            final_step_angle_error_q20_deg: a.final_step_angle_error_q20_deg,
            final_step_angle_error_q50_deg: a.final_step_angle_error_q50_deg,
            final_step_angle_error_q80_deg: a.final_step_angle_error_q80_deg,
            mean_rate_bps_hz: a.mean_rate_bps_hz,
            mean_sum_rate_bps_hz: a.mean_sum_rate_bps_hz,
        }
    }
}

/// Verify the output directory is writable before any computation is spent.
pub fn prepare_out_dir(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let probe = out_dir.join(".write_probe");
    fs::write(&probe, b"ok").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
    Ok(())
}

/// Write `tracks.csv`, `angle_cdf.csv`, `rate_cdf.csv` and `summary.json`;
/// returns the paths written.
pub fn emit_outputs(out: &MonteCarloOutput, out_dir: &Path) -> Result<Vec<PathBuf>> {
    prepare_out_dir(out_dir)?;
    let agg = aggregate(out);

    let tracks = out_dir.join("tracks.csv");
    write_tracks(out, &tracks)?;
    let angle = out_dir.join("angle_cdf.csv");
    write_angle_cdf(&agg, &angle)?;
    let rate = out_dir.join("rate_cdf.csv");
    write_rate_cdf(&agg, &rate)?;
    let summary = out_dir.join("summary.json");
    write_summary(out, &agg, &summary)?;

    Ok(vec![tracks, angle, rate, summary])
}

fn write_tracks(out: &MonteCarloOutput, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.into(),
        source: e,
    })?;
    let err = |e: csv::Error| Error::Csv {
        path: path.into(),
        source: e,
    };
    w.write_record(TRACKS_HEADER).map_err(err)?;
    for rec in &out.records {
        for row in &rec.rows {
            for scheme in Scheme::ALL {
                let est = row.scheme(scheme);
                w.write_record([
                    rec.trial.to_string(),
                    row.step.to_string(),
                    row.vehicle.to_string(),
                    scheme.name().to_string(),
                    row.theta_true.to_degrees().to_string(),
                    est.theta_est.to_degrees().to_string(),
                    row.d_true.to_string(),
                    est.d_est.to_string(),
                    row.v_true.to_string(),
                    est.v_est.to_string(),
                    est.rate_bps_hz.to_string(),
                ])
                .map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_angle_cdf(agg: &Aggregates, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.into(),
        source: e,
    })?;
    let err = |e: csv::Error| Error::Csv {
        path: path.into(),
        source: e,
    };
    w.write_record(ANGLE_CDF_HEADER).map_err(err)?;
    for scheme in Scheme::ALL {
        for (v, p) in compute_cdf(&agg.scheme(scheme).final_angle_errors_deg) {
            w.write_record([
                scheme.name().to_string(),
                agg.antennas.to_string(),
                v.to_string(),
                p.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_rate_cdf(agg: &Aggregates, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.into(),
        source: e,
    })?;
    let err = |e: csv::Error| Error::Csv {
        path: path.into(),
        source: e,
    };
    w.write_record(RATE_CDF_HEADER).map_err(err)?;
    // Per-vehicle rate samples under the scheme name, per-instant sum rates
    // under `<scheme>-sum`.
    for scheme in Scheme::ALL {
        for (v, p) in compute_cdf(&agg.scheme(scheme).rates) {
            w.write_record([
                scheme.name().to_string(),
                agg.antennas.to_string(),
                v.to_string(),
                p.to_string(),
            ])
            .map_err(err)?;
        }
    }
    for scheme in Scheme::ALL {
        let name = format!("{}-sum", scheme.name());
        for (v, p) in compute_cdf(&agg.scheme(scheme).sum_rates) {
            w.write_record([
                name.clone(),
                agg.antennas.to_string(),
                v.to_string(),
                p.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_summary(out: &MonteCarloOutput, agg: &Aggregates, path: &Path) -> Result<()> {
    let summary = Summary {
        config: &out.cfg,
        antennas: agg.antennas,
        trials: agg.trials,
        proposed: SchemeSummary::from_aggregate(&agg.proposed),
        ekf: SchemeSummary::from_aggregate(&agg.ekf),
        feedback: SchemeSummary::from_aggregate(&agg.feedback),
        proposed_rate_95pct_fraction: agg.proposed_rate_95pct_fraction,
        perfect_rate_bps_hz: agg.perfect_rate_bps_hz,
        diagnostics: agg.diagnostics,
    };
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read back a `tracks.csv` written by [`emit_outputs`].
pub fn read_tracks(path: &Path) -> Result<Vec<TrackRow>> {
    let err = |e: csv::Error| Error::Csv {
        path: path.into(),
        source: e,
    };
    let mut reader = csv::Reader::from_path(path).map_err(err)?;
    let headers = reader.headers().map_err(err)?.clone();
    if headers.iter().ne(TRACKS_HEADER) {
        return Err(Error::invalid_argument(format!(
            "unexpected tracks.csv header: {headers:?}"
        )));
    }
    let parse_num = |field: &str, name: &str| -> Result<f64> {
        field
            .parse()
            .map_err(|_| Error::invalid_argument(format!("bad {name} value `{field}`")))
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(err)?;
        rows.push(TrackRow {
            trial: r[0]
                .parse()
                .map_err(|_| Error::invalid_argument("bad trial value"))?,
            step: r[1]
                .parse()
                .map_err(|_| Error::invalid_argument("bad step value"))?,
            vehicle: r[2]
                .parse()
                .map_err(|_| Error::invalid_argument("bad vehicle value"))?,
            scheme: r[3].to_string(),
            theta_true_deg: parse_num(&r[4], "theta_true_deg")?,
            theta_est_deg: parse_num(&r[5], "theta_est_deg")?,
            d_true: parse_num(&r[6], "d_true")?,
            d_est: parse_num(&r[7], "d_est")?,
            v_true: parse_num(&r[8], "v_true")?,
            v_est: parse_num(&r[9], "v_est")?,
            rate: parse_num(&r[10], "rate")?,
        });
    }
    Ok(rows)
}

/// Recompute the angle and rate CDF files from a `tracks.csv`, labelling all
/// rows with `antennas`. Used by the `cdf` subcommand.
pub fn cdfs_from_tracks(tracks_path: &Path, out_dir: &Path, antennas: usize) -> Result<Vec<PathBuf>> {
    let rows = read_tracks(tracks_path)?;
    prepare_out_dir(out_dir)?;
    let max_step = rows.iter().map(|r| r.step).max().unwrap_or(0);

    let angle_path = out_dir.join("angle_cdf.csv");
    let rate_path = out_dir.join("rate_cdf.csv");
    let csv_err = |path: &Path| {
        let path = path.to_path_buf();
        move |e: csv::Error| Error::Csv {
            path: path.clone(),
            source: e,
        }
    };

    let mut w = csv::Writer::from_path(&angle_path).map_err(csv_err(&angle_path))?;
    w.write_record(ANGLE_CDF_HEADER).map_err(csv_err(&angle_path))?;
    for scheme in Scheme::ALL {
        let errors: Vec<f64> = rows
            .iter()
            .filter(|r| r.scheme == scheme.name() && r.step == max_step)
            .map(|r| (r.theta_est_deg - r.theta_true_deg).abs())
            .collect();
        for (v, p) in compute_cdf(&errors) {
            w.write_record([
                scheme.name().to_string(),
                antennas.to_string(),
                v.to_string(),
                p.to_string(),
            ])
            .map_err(csv_err(&angle_path))?;
        }
    }
    w.flush().map_err(|e| Error::io(&angle_path, e))?;

    let mut w = csv::Writer::from_path(&rate_path).map_err(csv_err(&rate_path))?;
    w.write_record(RATE_CDF_HEADER).map_err(csv_err(&rate_path))?;
    for scheme in Scheme::ALL {
        let rates: Vec<f64> = rows
            .iter()
            .filter(|r| r.scheme == scheme.name())
            .map(|r| r.rate)
            .collect();
        for (v, p) in compute_cdf(&rates) {
            w.write_record([
                scheme.name().to_string(),
                antennas.to_string(),
                v.to_string(),
                p.to_string(),
            ])
            .map_err(csv_err(&rate_path))?;
        }
    }
    w.flush().map_err(|e| Error::io(&rate_path, e))?;

    Ok(vec![angle_path, rate_path])
}
