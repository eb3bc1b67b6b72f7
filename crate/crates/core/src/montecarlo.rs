//! Monte Carlo execution and aggregation.
//!
//! Trials are independent work units keyed by trial index; parallel and
//! serial execution produce identical results because each trial derives its
//! own RNG stream and the merge is by index.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::metrics::{fraction_at_least, mean, quantile, rmse};
use crate::sim::{run_trial, Scheme, TrialDiagnostics, TrialRecord};

/// All trial records for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOutput {
    pub cfg: ScenarioConfig,
    pub records: Vec<TrialRecord>,
}

/// Run all configured trials in parallel.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<MonteCarloOutput> {
    cfg.validate()?;
    let records: Result<Vec<TrialRecord>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect();
    Ok(MonteCarloOutput {
        cfg: cfg.clone(),
        records: records?,
    })
}

/// Serial variant used to check order-independence of the merge.
pub fn run_monte_carlo_serial(cfg: &ScenarioConfig) -> Result<MonteCarloOutput> {
    cfg.validate()?;
    let records: Result<Vec<TrialRecord>> =
        (0..cfg.trials as u64).map(|t| run_trial(cfg, t)).collect();
    Ok(MonteCarloOutput {
        cfg: cfg.clone(),
        records: records?,
    })
}

/// Per-scheme pooled samples and summary statistics.
#[derive(Debug, Clone, Serialize)]
pub struct SchemeAggregate {
    /// |theta_est - theta_true| in degrees at the final step, one sample per
    /// (trial, vehicle).
    #[serde(skip)]
    pub final_angle_errors_deg: Vec<f64>,
    /// Per-(trial, step, vehicle) rate samples, bps/Hz.
    #[serde(skip)]
    pub rates: Vec<f64>,
    /// Per-(trial, step) sum rates over vehicles.
    #[serde(skip)]
    pub sum_rates: Vec<f64>,
    pub angle_rmse_deg: f64,
    pub final_step_angle_rmse_deg: f64,
    pub final_step_angle_error_q20_deg: f64,
    pub final_step_angle_error_q50_deg: f64,
    pub final_step_angle_error_q80_deg: f64,
    pub mean_rate_bps_hz: f64,
    pub mean_sum_rate_bps_hz: f64,
}

/// Aggregates over every trial of one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub antennas: usize,
    pub trials: usize,
    pub proposed: SchemeAggregate,
    pub ekf: SchemeAggregate,
    pub feedback: SchemeAggregate,
    pub diagnostics: TrialDiagnostics,
    /// Fraction of (trial, step) pairs in which the proposed scheme's sum
    /// rate reaches 95% of the perfect-alignment sum rate.
    pub proposed_rate_95pct_fraction: f64,
    /// Perfect-alignment per-vehicle rate, bps/Hz.
    pub perfect_rate_bps_hz: f64,
}

impl Aggregates {
    pub fn scheme(&self, s: Scheme) -> &SchemeAggregate {
        match s {
            Scheme::Proposed => &self.proposed,
            Scheme::Ekf => &self.ekf,
            Scheme::Feedback => &self.feedback,
        }
    }
}

fn aggregate_scheme(out: &MonteCarloOutput, scheme: Scheme) -> SchemeAggregate {
    let n_steps = out.cfg.n_steps;
    let n_vehicles = out.cfg.n_vehicles;
    let mut final_errors = Vec::with_capacity(out.records.len() * n_vehicles);
    let mut all_errors = Vec::with_capacity(out.records.len() * n_steps * n_vehicles);
    let mut rates = Vec::with_capacity(out.records.len() * n_steps * n_vehicles);
    let mut sum_rates = Vec::with_capacity(out.records.len() * n_steps);

    for rec in &out.records {
        for step in 1..=n_steps {
            let mut step_sum = 0.0;
            for vehicle in 0..n_vehicles {
                let row = &rec.rows[(step - 1) * n_vehicles + vehicle];
                let est = row.scheme(scheme);
                let err = est.angle_error_deg(row.theta_true);
                all_errors.push(err);
                if step == n_steps {
                    final_errors.push(err);
                }
                rates.push(est.rate_bps_hz);
                step_sum += est.rate_bps_hz;
            }
            sum_rates.push(step_sum);
        }
    }

    SchemeAggregate {
        angle_rmse_deg: rmse(&all_errors),
        final_step_angle_rmse_deg: rmse(&final_errors),
        final_step_angle_error_q20_deg: quantile(&final_errors, 0.2),
        final_step_angle_error_q50_deg: quantile(&final_errors, 0.5),
        final_step_angle_error_q80_deg: quantile(&final_errors, 0.8),
        mean_rate_bps_hz: mean(&rates),
        mean_sum_rate_bps_hz: mean(&sum_rates),
        final_angle_errors_deg: final_errors,
        rates,
        sum_rates,
    }
}

/// Reduce all trial records to pooled samples and summary statistics.
pub fn aggregate(out: &MonteCarloOutput) -> Aggregates {
    let mut diagnostics = TrialDiagnostics::default();
    for rec in &out.records {
        diagnostics.proposed.merge(&rec.diagnostics.proposed);
        diagnostics.feedback.merge(&rec.diagnostics.feedback);
        diagnostics.ekf_ridge_events += rec.diagnostics.ekf_ridge_events;
    }
    let proposed = aggregate_scheme(out, Scheme::Proposed);
    let ekf = aggregate_scheme(out, Scheme::Ekf);
    let feedback = aggregate_scheme(out, Scheme::Feedback);

    let snr_lin = 10f64.powf(out.cfg.nominal_snr_db / 10.0);
    let perfect_rate = (1.0 + snr_lin).log2();
    let perfect_sum = perfect_rate * out.cfg.n_vehicles as f64;
    let rate_fraction = fraction_at_least(&proposed.sum_rates, 0.95 * perfect_sum);

    Aggregates {
        antennas: out.cfg.n_tx,
        trials: out.records.len(),
        proposed,
        ekf,
        feedback,
        diagnostics,
        proposed_rate_95pct_fraction: rate_fraction,
        perfect_rate_bps_hz: perfect_rate,
    }
}
