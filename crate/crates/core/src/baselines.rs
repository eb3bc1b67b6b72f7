//! Comparison trackers: an extended Kalman filter on the same motion and
//! measurement models, and the feedback-based communication-only scheme
//! realized as echo-noise inflation.
//!
//! The EKF state is `(theta, d, v, Re beta, Im beta)`. The transition is the
//! linearized evolution model with analytic Jacobian; the measurement stacks
//! `[tau, gamma, Re y[0..n_rx], Im y[0..n_rx]]` with analytic gradients and a
//! diagonal noise covariance, so the update is processed sequentially per
//! scalar component (exactly equivalent to the batch update) in Joseph form.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::kinematics::{evolve_linearized, Measurement, ProcessNoise};
use crate::signal::{dirichlet_gain, ArrayConfig, NoiseConfig};

pub type StateVector = SVector<f64, 5>;
pub type StateMatrix = SMatrix<f64, 5, 5>;

/// EKF state: mean vector and covariance over
/// `(theta, range, speed, Re beta, Im beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub x: StateVector,
    pub p: StateMatrix,
}

impl EkfState {
    pub fn new(x: StateVector, p: StateMatrix) -> Self {
        EkfState { x, p }
    }

    pub fn theta(&self) -> f64 {
        self.x[0]
    }

    pub fn range(&self) -> f64 {
        self.x[1]
    }

    pub fn speed(&self) -> f64 {
        self.x[2]
    }

    pub fn beta(&self) -> Complex64 {
        Complex64::new(self.x[3], self.x[4])
    }
}

/// Deterministic transition `f(x)` of the linearized evolution model.
pub fn transition(x: &StateVector, dt: f64) -> StateVector {
    let lin = evolve_linearized(x[0], x[1], x[2], dt);
    StateVector::from([
        lin.theta,
        lin.range,
        lin.speed,
        x[3] * lin.beta_growth,
        x[4] * lin.beta_growth,
    ])
}

/// Analytic Jacobian of [`transition`].
pub fn transition_jacobian(x: &StateVector, dt: f64) -> StateMatrix {
    let (theta, d, v) = (x[0], x[1], x[2]);
    let (sin_t, cos_t) = theta.sin_cos();
    let travel = v * dt;
    let mut f = StateMatrix::identity();
    // theta' = theta + v dt sin(theta) / d
    f[(0, 0)] = 1.0 + travel * cos_t / d;
    f[(0, 1)] = -travel * sin_t / (d * d);
    f[(0, 2)] = dt * sin_t / d;
    // d' = d - v dt cos(theta)
    f[(1, 0)] = travel * sin_t;
    f[(1, 1)] = 1.0;
    f[(1, 2)] = -dt * cos_t;
    // beta' = beta * rho, rho = 1 + v dt cos(theta) / d
    let rho = 1.0 + travel * cos_t / d;
    let drho_dtheta = -travel * sin_t / d;
    let drho_dd = -travel * cos_t / (d * d);
    let drho_dv = dt * cos_t / d;
    for (row, b) in [(3, x[3]), (4, x[4])] {
        f[(row, 0)] = b * drho_dtheta;
        f[(row, 1)] = b * drho_dd;
        f[(row, 2)] = b * drho_dv;
        f[(row, row)] = rho;
    }
    f
}

/// Process-noise covariance: diagonal with the complex reflection noise split
/// evenly across its two real components.
pub fn process_covariance(process: &ProcessNoise) -> StateMatrix {
    StateMatrix::from_diagonal(&StateVector::from([
        process.sigma_theta * process.sigma_theta,
        process.sigma_d * process.sigma_d,
        process.sigma_v * process.sigma_v,
        process.sigma_beta * process.sigma_beta / 2.0,
        process.sigma_beta * process.sigma_beta / 2.0,
    ]))
}

/// EKF prediction: `x <- f(x)`, `P <- F P F^T + Q`.
pub fn ekf_predict(s: &EkfState, dt: f64, process: &ProcessNoise) -> EkfState {
    let f = transition_jacobian(&s.x, dt);
    EkfState {
        x: transition(&s.x, dt),
        p: f * s.p * f.transpose() + process_covariance(process),
    }
}

/// Stacked real measurement model `[tau, gamma, Re y, Im y]` evaluated at
/// state `x` for a beam pointed at `beam_theta`, with per-component gradient
/// rows and noise variances.
pub struct MeasurementModel {
    pub values: Vec<f64>,
    pub gradients: Vec<StateVector>,
    pub variances: Vec<f64>,
}

/// Evaluate the measurement function and its analytic Jacobian at `x`.
pub fn measurement_model(
    x: &StateVector,
    beam_theta: f64,
    arr: &ArrayConfig,
    noise: &NoiseConfig,
    power: f64,
) -> MeasurementModel {
    let dim = 2 + 2 * arr.n_rx;
    let mut values = Vec::with_capacity(dim);
    let mut gradients = Vec::with_capacity(dim);
    let mut variances = Vec::with_capacity(dim);

    let (theta, d, v) = (x[0], x[1], x[2]);
    let beta = Complex64::new(x[3], x[4]);
    let (sin_t, cos_t) = theta.sin_cos();

    // Delay.
    values.push(2.0 * d / arr.wave_speed);
    let mut g = StateVector::zeros();
    g[1] = 2.0 / arr.wave_speed;
    gradients.push(g);
    variances.push(noise.sigma_tau * noise.sigma_tau);

    // Doppler.
    let c1 = arr.doppler_scale();
    values.push(c1 * v * cos_t);
    let mut g = StateVector::zeros();
    g[0] = -c1 * v * sin_t;
    g[2] = c1 * cos_t;
    gradients.push(g);
    variances.push(noise.sigma_gamma * noise.sigma_gamma);

    // Echo samples y[l] = beta * g_l(theta) with
    // g_l = scale * e^{j pi l cos} * D(cos_beam - cos).
    let scale = arr.array_gain() * power.sqrt();
    let gap = beam_theta.cos() - cos_t;
    let inner = dirichlet_gain(gap, arr.n_tx);
    let inner_deriv = dirichlet_derivative(gap, arr.n_tx);
    let echo_var = noise.echo_noise_var() / 2.0;
    for l in 0..arr.n_rx {
        let lw = std::f64::consts::PI * l as f64;
        let rx_phase = Complex64::from_polar(1.0, lw * cos_t);
        let g_l = rx_phase * inner * scale;
        // d g_l / d theta = -sin(theta) * d g_l / d cos(theta); the beam gap
        // enters with a negative sign.
        let dg_dcos = (rx_phase * inner * Complex64::new(0.0, lw) - rx_phase * inner_deriv)
            * scale;
        let dg_dtheta = dg_dcos * (-sin_t);
        let y = beta * g_l;
        let dy_dtheta = beta * dg_dtheta;

        // Real part.
        values.push(y.re);
        let mut g = StateVector::zeros();
        g[0] = dy_dtheta.re;
        g[3] = g_l.re;
        g[4] = -g_l.im;
        gradients.push(g);
        variances.push(echo_var);

        // Imaginary part.
        values.push(y.im);
        let mut g = StateVector::zeros();
        g[0] = dy_dtheta.im;
        g[3] = g_l.im;
        g[4] = g_l.re;
        gradients.push(g);
        variances.push(echo_var);
    }

    MeasurementModel {
        values,
        gradients,
        variances,
    }
}

fn dirichlet_derivative(x: f64, n: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let kw = std::f64::consts::PI * k as f64;
        acc += Complex64::new(0.0, kw) * Complex64::from_polar(1.0, kw * x);
    }
    acc
}

/// Stack a measurement into the real observation vector matching
/// [`measurement_model`] ordering.
pub fn stack_measurement(meas: &Measurement) -> Vec<f64> {
    let mut z = Vec::with_capacity(2 + 2 * meas.echo.len());
    z.push(meas.tau);
    z.push(meas.gamma);
    for y in meas.echo.samples() {
        z.push(y.re);
        z.push(y.im);
    }
    z
}

const RIDGE: f64 = 1e-9;

/// EKF measurement update.
///
/// Linearizes at the predicted state and processes the stacked components
/// sequentially (the noise covariance is diagonal, so this equals the batch
/// update) with Joseph-form covariance propagation. Returns the updated
/// state and the number of components whose innovation variance needed a
/// ridge.
pub fn ekf_update(
    s: &EkfState,
    meas: &Measurement,
    beam_theta: f64,
    arr: &ArrayConfig,
    noise: &NoiseConfig,
    power: f64,
) -> Result<(EkfState, u64)> {
    let z = stack_measurement(meas);
    let model = measurement_model(&s.x, beam_theta, arr, noise, power);
    if z.len() != model.values.len() {
        return Err(Error::invalid_argument(format!(
            "measurement dimension {} does not match model {}",
            z.len(),
            model.values.len()
        )));
    }

    let x0 = s.x;
    let mut dx = StateVector::zeros();
    let mut p = s.p;
    let mut ridged = 0u64;
    let identity = StateMatrix::identity();

    for i in 0..z.len() {
        let h = model.gradients[i];
        let predicted = model.values[i] + h.dot(&dx);
        let innovation = z[i] - predicted;
        let mut s_var = (h.transpose() * p * h)[(0, 0)] + model.variances[i];
        if !(s_var > 0.0) {
            s_var += RIDGE;
            ridged += 1;
        }
        let k = p * h / s_var;
        dx += k * innovation;
        let ikh = identity - k * h.transpose();
        p = ikh * p * ikh.transpose() + k * model.variances[i] * k.transpose();
    }

    // Symmetrize against accumulated rounding.
    p = (p + p.transpose()) * 0.5;
    Ok((
        EkfState {
            x: x0 + dx,
            p,
        },
        ridged,
    ))
}

/// EKF-based tracker instance mirroring the message-passing tracker's
/// step interface.
#[derive(Debug, Clone)]
pub struct EkfTracker {
    pub state: EkfState,
    arr: ArrayConfig,
    noise: NoiseConfig,
    process: ProcessNoise,
    slot_s: f64,
    power: f64,
    /// Beam angle for the upcoming step, from the last prediction.
    pub theta_pred: f64,
    pub ridge_events: u64,
}

impl EkfTracker {
    pub fn new(
        state: EkfState,
        arr: ArrayConfig,
        noise: NoiseConfig,
        process: ProcessNoise,
        slot_s: f64,
        power: f64,
    ) -> Self {
        let theta_pred = transition(&state.x, slot_s)[0];
        EkfTracker {
            state,
            arr,
            noise,
            process,
            slot_s,
            power,
            theta_pred,
            ridge_events: 0,
        }
    }

    /// Predict, update on the given measurement (generated with
    /// `beam_theta`), and refresh the next-step beam prediction.
    pub fn track_step(&mut self, meas: &Measurement, beam_theta: f64) -> Result<&EkfState> {
        let predicted = ekf_predict(&self.state, self.slot_s, &self.process);
        let (updated, ridged) =
            ekf_update(&predicted, meas, beam_theta, &self.arr, &self.noise, self.power)?;
        self.ridge_events += ridged;
        self.state = updated;
        self.theta_pred = transition(&self.state.x, self.slot_s)[0]
            .clamp(1e-6, std::f64::consts::PI - 1e-6);
        Ok(&self.state)
    }
}

/// Configuration for the feedback-based scheme: the echo-noise variance is
/// multiplied by `inflation` (one pilot instead of a matched-filtered block);
/// everything else is unchanged and the same message-passing tracker runs on
/// it.
pub fn feedback_config(base: &ScenarioConfig, inflation: f64) -> Result<ScenarioConfig> {
    if !(inflation >= 1.0) || !inflation.is_finite() {
        return Err(Error::invalid_argument(format!(
            "feedback inflation must be >= 1, got {inflation}"
        )));
    }
    let mut cfg = base.clone();
    cfg.sigma_y2 = base.sigma_y2 * inflation;
    Ok(cfg)
}
