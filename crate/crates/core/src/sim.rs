//! Single-trial simulation: ground truth, shared measurement streams and the
//! three trackers running side by side.
//!
//! Per step and vehicle, one set of standard-normal noise draws feeds every
//! scheme. The message-passing tracker and the EKF consume the identical
//! measurement stream (beamformed with the message-passing tracker's
//! prediction; the EKF is told which beam was used). The feedback scheme
//! gets its own stream built from the same draws: its echo is beamformed
//! with its own prediction and carries the inflated noise of a single-pilot
//! system.
//!
//! Everything is deterministic given `(seed, trial_index)`: each trial owns
//! an independent counter-mode RNG stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::baselines::{feedback_config, EkfState, EkfTracker, StateMatrix, StateVector};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::gaussian::{ComplexGaussian, Gaussian};
use crate::kinematics::{
    evolve_linearized, init_scenario, measurement_with_draw, step_truth, VehicleTruth,
};
use crate::signal::{pathloss_for_nominal_snr, received_snr, NoiseDraw};
use crate::tracker::{BeliefSet, MessagePassingTracker, TrackerConfig, TrackerDiagnostics};

/// The three benchmark schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Proposed,
    Ekf,
    Feedback,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Proposed, Scheme::Ekf, Scheme::Feedback];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Ekf => "ekf",
            Scheme::Feedback => "feedback",
        }
    }
}

/// One scheme's estimates and achieved rate for one step and vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeStep {
    pub theta_est: f64,
    pub d_est: f64,
    pub v_est: f64,
    /// Beam angle this scheme transmitted with during this step.
    pub theta_pred_used: f64,
    /// Downlink rate achieved with that beam, bps/Hz.
    pub rate_bps_hz: f64,
}

impl SchemeStep {
    /// Absolute angle error in degrees, computed on the degree-converted
    /// values so it reproduces exactly from the emitted CSV columns.
    pub fn angle_error_deg(&self, theta_true: f64) -> f64 {
        (self.theta_est.to_degrees() - theta_true.to_degrees()).abs()
    }
}

/// Truth and per-scheme estimates for one step and vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    /// Tracking step, 1-based.
    pub step: usize,
    /// Vehicle index, 0-based.
    pub vehicle: usize,
    pub theta_true: f64,
    pub d_true: f64,
    pub v_true: f64,
    pub proposed: SchemeStep,
    pub ekf: SchemeStep,
    pub feedback: SchemeStep,
}

impl StepRecord {
    pub fn scheme(&self, s: Scheme) -> &SchemeStep {
        match s {
            Scheme::Proposed => &self.proposed,
            Scheme::Ekf => &self.ekf,
            Scheme::Feedback => &self.feedback,
        }
    }
}

/// Guard-event counters accumulated over one trial.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize)]
pub struct TrialDiagnostics {
    pub proposed: TrackerDiagnostics,
    pub feedback: TrackerDiagnostics,
    pub ekf_ridge_events: u64,
}

/// Complete outcome of one seeded trial: `n_steps * n_vehicles` rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub rows: Vec<StepRecord>,
    pub diagnostics: TrialDiagnostics,
}

fn tracker_config(cfg: &ScenarioConfig, use_radar: bool) -> TrackerConfig {
    TrackerConfig {
        arr: cfg.array(),
        noise: cfg.noise(),
        process: cfg.process_noise(),
        slot_s: cfg.slot_s,
        power: cfg.power,
        loopy_iters: cfg.loopy_iters,
        use_radar_delay_doppler: use_radar,
    }
}

struct VehicleLane {
    truth: VehicleTruth,
    proposed: MessagePassingTracker,
    proposed_belief: BeliefSet,
    feedback: MessagePassingTracker,
    feedback_belief: BeliefSet,
    ekf: EkfTracker,
}

/// Initial beliefs: truth perturbed by one draw of the corresponding process
/// noise, with variances inflated by `prior_inflation`. All schemes share the
/// same perturbed starting point.
fn initial_beliefs(
    truth: &VehicleTruth,
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> (BeliefSet, EkfState) {
    let pn = cfg.process_noise();
    let infl = cfg.prior_inflation;
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    let theta0 = truth.theta + pn.sigma_theta * draw();
    let d0 = truth.range + pn.sigma_d * draw();
    let v0 = truth.speed + pn.sigma_v * draw();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let beta0 = truth.beta + Complex64::new(draw(), draw()) * (pn.sigma_beta * half);

    let belief = BeliefSet {
        theta: Gaussian::new(theta0, infl * pn.sigma_theta * pn.sigma_theta),
        range: Gaussian::new(d0, infl * pn.sigma_d * pn.sigma_d),
        speed: Gaussian::new(v0, infl * pn.sigma_v * pn.sigma_v),
        beta: ComplexGaussian::new(beta0, infl * pn.sigma_beta * pn.sigma_beta),
        theta_pred_rsu: evolve_linearized(theta0, d0.max(1e-6), v0, cfg.slot_s).theta,
    };
    let ekf = EkfState::new(
        StateVector::from([theta0, d0, v0, beta0.re, beta0.im]),
        StateMatrix::from_diagonal(&StateVector::from([
            infl * pn.sigma_theta * pn.sigma_theta,
            infl * pn.sigma_d * pn.sigma_d,
            infl * pn.sigma_v * pn.sigma_v,
            infl * pn.sigma_beta * pn.sigma_beta / 2.0,
            infl * pn.sigma_beta * pn.sigma_beta / 2.0,
        ])),
    );
    (belief, ekf)
}

/// Run one trial. Deterministic in `(cfg.seed, trial_index)`.
pub fn run_trial(cfg: &ScenarioConfig, trial_index: u64) -> Result<TrialRecord> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial_index.wrapping_add(1));

    let arr = cfg.array();
    let noise = cfg.noise();
    let fb_cfg = feedback_config(cfg, cfg.inflation)?;
    let fb_noise = fb_cfg.noise();
    let process = cfg.process_noise();
    let alpha = Complex64::new(
        pathloss_for_nominal_snr(cfg.nominal_snr_db, cfg.power, &arr, &noise),
        0.0,
    );

    let mut lanes = Vec::with_capacity(cfg.n_vehicles);
    for truth in init_scenario(cfg, &mut rng)? {
        let (belief, ekf_state) = initial_beliefs(&truth, cfg, &mut rng);
        lanes.push(VehicleLane {
            truth,
            proposed: MessagePassingTracker::new(tracker_config(cfg, true))?,
            proposed_belief: belief,
            feedback: MessagePassingTracker::new(tracker_config(
                &fb_cfg,
                !cfg.feedback_drop_radar,
            ))?,
            feedback_belief: belief,
            ekf: EkfTracker::new(ekf_state, arr, noise, process, cfg.slot_s, cfg.power),
        });
    }

    let mut rows = Vec::with_capacity(cfg.n_steps * cfg.n_vehicles);
    for step in 1..=cfg.n_steps {
        for (vehicle, lane) in lanes.iter_mut().enumerate() {
            lane.truth = step_truth(&lane.truth, cfg.slot_s, &process, &mut rng);
            let draw = NoiseDraw::sample(arr.n_rx, &mut rng);

            let beam_main = lane.proposed_belief.theta_pred_rsu;
            let beam_fb = lane.feedback_belief.theta_pred_rsu;
            let beam_ekf = lane.ekf.theta_pred;

            let meas_main =
                measurement_with_draw(&lane.truth, beam_main, cfg.power, &arr, &noise, &draw)?;
            let meas_fb =
                measurement_with_draw(&lane.truth, beam_fb, cfg.power, &arr, &fb_noise, &draw)?;

            lane.proposed_belief = lane.proposed.track_step(&lane.proposed_belief, &meas_main)?;
            lane.feedback_belief = lane.feedback.track_step(&lane.feedback_belief, &meas_fb)?;
            lane.ekf.track_step(&meas_main, beam_main)?;

            let rate = |beam: f64| -> Result<f64> {
                let snr = received_snr(
                    lane.truth.theta,
                    beam.clamp(1e-6, std::f64::consts::PI - 1e-6),
                    beam.clamp(1e-6, std::f64::consts::PI - 1e-6),
                    alpha,
                    cfg.power,
                    &arr,
                    &noise,
                )?;
                Ok((1.0 + snr).log2())
            };

            rows.push(StepRecord {
                step,
                vehicle,
                theta_true: lane.truth.theta,
                d_true: lane.truth.range,
                v_true: lane.truth.speed,
                proposed: SchemeStep {
                    theta_est: lane.proposed_belief.theta.mean,
                    d_est: lane.proposed_belief.range.mean,
                    v_est: lane.proposed_belief.speed.mean,
                    theta_pred_used: beam_main,
                    rate_bps_hz: rate(beam_main)?,
                },
                ekf: SchemeStep {
                    theta_est: lane.ekf.state.theta(),
                    d_est: lane.ekf.state.range(),
                    v_est: lane.ekf.state.speed(),
                    theta_pred_used: beam_ekf,
                    rate_bps_hz: rate(beam_ekf)?,
                },
                feedback: SchemeStep {
                    theta_est: lane.feedback_belief.theta.mean,
                    d_est: lane.feedback_belief.range.mean,
                    v_est: lane.feedback_belief.speed.mean,
                    theta_pred_used: beam_fb,
                    rate_bps_hz: rate(beam_fb)?,
                },
            });
        }
    }

    let mut diagnostics = TrialDiagnostics::default();
    for lane in &lanes {
        diagnostics.proposed.merge(&lane.proposed.diagnostics());
        diagnostics.feedback.merge(&lane.feedback.diagnostics());
        diagnostics.ekf_ridge_events += lane.ekf.ridge_events;
    }

    Ok(TrialRecord {
        trial: trial_index,
        rows,
        diagnostics,
    })
}
