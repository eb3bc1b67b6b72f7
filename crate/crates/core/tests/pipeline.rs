//! End-to-end tracking-quality invariants on the full simulation pipeline.

use beamtrack_core::config::ScenarioConfig;
use beamtrack_core::metrics::rmse;
use beamtrack_core::montecarlo::{aggregate, run_monte_carlo};
use beamtrack_core::sim::{run_trial, Scheme};

/// Per-trial angle RMSE (degrees) over all steps and vehicles.
fn trial_angle_rmse_deg(cfg: &ScenarioConfig, trial: u64, scheme: Scheme) -> f64 {
    let rec = run_trial(cfg, trial).unwrap();
    let errs: Vec<f64> = rec
        .rows
        .iter()
        .map(|r| r.scheme(scheme).angle_error_deg(r.theta_true))
        .collect();
    rmse(&errs)
}

#[test]
fn angle_rmse_below_one_degree_in_most_trials() {
    // Reference noise levels, full-size array: the tracked angle stays
    // within 1 degree RMSE over the 20-step track in at least 90% of trials.
    let cfg = ScenarioConfig {
        trials: 200,
        ..ScenarioConfig::default()
    };
    let ok = (0..200u64)
        .filter(|&t| trial_angle_rmse_deg(&cfg, t, Scheme::Proposed) < 1.0)
        .count();
    assert!(ok >= 180, "only {ok}/200 trials under 1 degree RMSE");
}

#[test]
fn heavier_measurement_noise_degrades_tracking() {
    // Scaling every measurement noise variance up by 100x strictly increases
    // the final-step mean angle error.
    let base = ScenarioConfig {
        n_tx: 16,
        n_rx: 16,
        trials: 200,
        ..ScenarioConfig::default()
    };
    let noisy = ScenarioConfig {
        sigma_tau: base.sigma_tau * 10.0,
        sigma_gamma: base.sigma_gamma * 10.0,
        sigma_y2: base.sigma_y2 * 100.0,
        ..base.clone()
    };
    let base_agg = aggregate(&run_monte_carlo(&base).unwrap());
    let noisy_agg = aggregate(&run_monte_carlo(&noisy).unwrap());
    assert!(
        noisy_agg.proposed.final_step_angle_rmse_deg > base_agg.proposed.final_step_angle_rmse_deg,
        "100x noise: rmse {} vs base {}",
        noisy_agg.proposed.final_step_angle_rmse_deg,
        base_agg.proposed.final_step_angle_rmse_deg
    );
}

#[test]
fn feedback_inflation_degrades_final_step_error() {
    // The single-pilot (inflated-noise) scheme tracks strictly worse than
    // the full matched-filtered scheme on the same noise draws.
    let cfg = ScenarioConfig {
        n_tx: 16,
        n_rx: 16,
        trials: 200,
        ..ScenarioConfig::default()
    };
    let agg = aggregate(&run_monte_carlo(&cfg).unwrap());
    assert!(
        agg.feedback.final_step_angle_rmse_deg > agg.proposed.final_step_angle_rmse_deg,
        "feedback rmse {} vs proposed {}",
        agg.feedback.final_step_angle_rmse_deg,
        agg.proposed.final_step_angle_rmse_deg
    );
    // Median ordering as well, not just the mean.
    assert!(
        agg.feedback.final_step_angle_error_q50_deg > agg.proposed.final_step_angle_error_q50_deg
    );
}

#[test]
fn estimates_feed_rates_sensibly() {
    // Rates are bounded by the perfect-alignment rate and positive.
    let cfg = ScenarioConfig {
        n_tx: 16,
        n_rx: 16,
        trials: 5,
        ..ScenarioConfig::default()
    };
    let agg = aggregate(&run_monte_carlo(&cfg).unwrap());
    for scheme in Scheme::ALL {
        let s = agg.scheme(scheme);
        assert!(s.mean_rate_bps_hz > 0.0);
        assert!(s.mean_rate_bps_hz <= agg.perfect_rate_bps_hz + 1e-9);
        for &r in &s.rates {
            assert!((0.0..=agg.perfect_rate_bps_hz + 1e-9).contains(&r));
        }
    }
}
