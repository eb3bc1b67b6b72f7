//! Ground-truth vehicle motion and the linearized state-evolution model.
//!
//! Coordinates: the RSU sits at the origin with its ULA axis along +x; the
//! road runs parallel to the array at fixed y > 0 and vehicles drive in the
//! -x direction. The angle `theta` is measured from the +x axis, so
//! `cos(theta) = x / d` and `theta` grows as a vehicle passes. With this
//! convention the exact per-step geometry satisfies both the law-of-sines and
//! law-of-cosines relations that the linearized model approximates:
//!
//! ```text
//! theta' = theta + v*T*sin(theta)/d
//! d'     = d - v*T*cos(theta)
//! v'     = v
//! beta'  = beta * (1 + v*T*cos(theta)/d)
//! ```
//!
//! Ground truth moves exactly in Cartesian coordinates; process noise is
//! injected into the derived polar state after each exact step, matching the
//! additive-noise evolution model the trackers assume.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::signal::{self, EchoSample, NoiseDraw};

/// Per-step standard deviations of the state-evolution noise.
#[derive(Debug, Clone, Copy)]
pub struct ProcessNoise {
    /// Angle noise, radians.
    pub sigma_theta: f64,
    /// Range noise, meters.
    pub sigma_d: f64,
    /// Speed noise, m/s.
    pub sigma_v: f64,
    /// Reflection-coefficient noise, total complex std.
    pub sigma_beta: f64,
}

impl ProcessNoise {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_theta", self.sigma_theta),
            ("sigma_d", self.sigma_d),
            ("sigma_v", self.sigma_v),
            ("sigma_beta", self.sigma_beta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid_argument(format!(
                    "{name} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }
}

/// Ground-truth state of one vehicle: exact Cartesian carrier plus the noisy
/// polar state the measurements are generated from.
#[derive(Debug, Clone, Copy)]
pub struct VehicleTruth {
    /// Position along the array axis, meters.
    pub x: f64,
    /// Perpendicular offset of the road, meters.
    pub y: f64,
    /// Speed along -x, m/s.
    pub speed: f64,
    /// Range to the RSU, meters (polar state, noise included).
    pub range: f64,
    /// Angle from the +x axis, radians in (0, pi).
    pub theta: f64,
    /// Complex reflection coefficient.
    pub beta: Complex64,
    /// Radar cross-section; `beta` is derived as `rcs / (2 * range)`.
    pub rcs: Complex64,
    /// Set when the polar angle state left its valid domain.
    pub end_of_track: bool,
}

impl VehicleTruth {
    /// Exact initial state at position (x, y) with the given speed.
    pub fn new(x: f64, y: f64, speed: f64, rcs: Complex64) -> Result<Self> {
        if !(y > 0.0) {
            return Err(Error::invalid_argument("road offset y must be positive"));
        }
        let range = x.hypot(y);
        let theta = y.atan2(x);
        Ok(VehicleTruth {
            x,
            y,
            speed,
            range,
            theta,
            beta: rcs / (2.0 * range),
            rcs,
            end_of_track: false,
        })
    }
}

/// Deterministic part of the linearized one-step state evolution.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedStep {
    pub theta: f64,
    pub range: f64,
    pub speed: f64,
    /// Multiplicative growth factor of the reflection coefficient,
    /// `rho = 1 + v*T*cos(theta)/d`.
    pub beta_growth: f64,
}

/// One step of the linearized evolution model used by all trackers.
pub fn evolve_linearized(theta: f64, range: f64, speed: f64, dt: f64) -> LinearizedStep {
    let (sin_t, cos_t) = theta.sin_cos();
    let travel = speed * dt;
    LinearizedStep {
        theta: theta + travel * sin_t / range,
        range: range - travel * cos_t,
        speed,
        beta_growth: 1.0 + travel * cos_t / range,
    }
}

/// Initial vehicle states from the scenario configuration; speeds are drawn
/// uniformly from the configured range.
pub fn init_scenario(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<Vec<VehicleTruth>> {
    let rcs = Complex64::new(cfg.rcs_re, cfg.rcs_im);
    let speed_dist = rand_distr::Uniform::new_inclusive(cfg.speed_min, cfg.speed_max)
        .map_err(|e| Error::invalid_argument(format!("speed range: {e}")))?;
    cfg.initial_x
        .iter()
        .map(|&x| {
            let speed = speed_dist.sample(rng);
            VehicleTruth::new(x, cfg.road_y, speed, rcs)
        })
        .collect()
}

/// Advance ground truth by one slot: exact Cartesian motion, exact polar
/// re-derivation, then additive process noise on the polar state and the
/// speed.
pub fn step_truth(
    s: &VehicleTruth,
    dt: f64,
    noise: &ProcessNoise,
    rng: &mut impl Rng,
) -> VehicleTruth {
    debug_assert!(dt > 0.0);
    let x = s.x - s.speed * dt;
    let range_exact = x.hypot(s.y);
    let theta_exact = s.y.atan2(x);

    let draw = |sigma: f64, rng: &mut dyn rand::RngCore| -> f64 {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).unwrap().sample(rng)
        } else {
            0.0
        }
    };
    let theta = theta_exact + draw(noise.sigma_theta, rng);
    let range = range_exact + draw(noise.sigma_d, rng);
    let speed = s.speed + draw(noise.sigma_v, rng);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let beta_noise = if noise.sigma_beta > 0.0 {
        Complex64::new(
            draw(noise.sigma_beta, rng) * half,
            draw(noise.sigma_beta, rng) * half,
        )
    } else {
        Complex64::new(0.0, 0.0)
    };

    let mut end_of_track = s.end_of_track;
    let mut theta = theta;
    if theta <= 0.0 || theta >= std::f64::consts::PI {
        end_of_track = true;
        theta = theta.clamp(1e-6, std::f64::consts::PI - 1e-6);
    }

    VehicleTruth {
        x,
        y: s.y,
        speed,
        range,
        theta,
        beta: s.rcs / (2.0 * range) + beta_noise,
        rcs: s.rcs,
        end_of_track,
    }
}

/// One step's radar observables for a single vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Round-trip delay, seconds.
    pub tau: f64,
    /// Doppler shift, Hz.
    pub gamma: f64,
    /// Per-antenna echo samples.
    pub echo: EchoSample,
}

/// Bundle the delay/Doppler/echo observations for one vehicle and step,
/// given pre-drawn standard-normal noise.
pub fn measurement_with_draw(
    s: &VehicleTruth,
    theta_pred: f64,
    power: f64,
    arr: &signal::ArrayConfig,
    noise: &signal::NoiseConfig,
    draw: &NoiseDraw,
) -> Result<Measurement> {
    let tau = 2.0 * s.range / arr.wave_speed + noise.sigma_tau * draw.z_tau;
    let gamma =
        arr.doppler_scale() * s.speed * s.theta.cos() + noise.sigma_gamma * draw.z_gamma;
    let echo = signal::echo_with_draw(s.beta, s.theta, theta_pred, power, arr, noise, draw)?;
    Ok(Measurement { tau, gamma, echo })
}

/// Bundle one vehicle's observations, drawing fresh noise from `rng`.
pub fn generate_measurements(
    s: &VehicleTruth,
    theta_pred: f64,
    power: f64,
    arr: &signal::ArrayConfig,
    noise: &signal::NoiseConfig,
    rng: &mut impl Rng,
) -> Result<Measurement> {
    let draw = NoiseDraw::sample(arr.n_rx, rng);
    measurement_with_draw(s, theta_pred, power, arr, noise, &draw)
}
