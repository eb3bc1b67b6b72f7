//! Predictive-beamforming tracker based on parametric Gaussian message
//! passing.
//!
//! Each tracking step runs a fixed message schedule on the step's slice of
//! the factor graph:
//!
//! 1. **Prediction** — push the previous beliefs through the linearized
//!    evolution model; the predicted angle mean is the beam used at this
//!    step.
//! 2. **Range update** — fuse the delay likelihood into the range belief.
//! 3. **Loopy refinement** — the echo samples couple the angle and the
//!    reflection coefficient through auxiliary unit-modulus variables
//!    `eps_q = exp(-j*pi*q*cos(theta))`, `q = i - l` over transmit element
//!    `i` and receive antenna `l`. A few mean-field sweeps alternate:
//!    prior messages to each `eps_q` from the current angle belief,
//!    observation-side residual messages to each `eps_q`, the reflection
//!    coefficient belief, and angle messages recovered from the `eps_q`
//!    observations.
//! 4. **Speed update and Doppler angle message** — mean-field messages
//!    through the cosine vertex.
//! 5. **Angle belief** — fuse prediction, Doppler message and all echo
//!    angle messages; its linearized push-forward is the next beam.
//!
//! Phase recovery from `eps_q` is anchored at the current angle belief: the
//! known predicted phase is divided out so the inverse-trig series operate
//! near their expansion point, and messages that would leave the principal
//! branch are discarded rather than unwrapped. The final cosine-to-angle
//! conversion is likewise linearized around the anchor; the raw cubic
//! arccos series is reserved for the wide-variance Doppler path where its
//! bias is immaterial.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{
    self, arccos_taylor, complex_exp_moments, cos_moments, exp_to_angle_message, fuse,
    fuse_complex, ComplexGaussian, Gaussian,
};
use crate::kinematics::{evolve_linearized, Measurement, ProcessNoise};
use crate::signal::{ArrayConfig, EchoSample, NoiseConfig};

const ANGLE_MARGIN: f64 = 1e-6;

/// Step size for re-centering the per-sweep linearization anchor on the
/// refreshed angle estimate. Chosen well inside the stability margin of the
/// sweep recursion observed across array sizes.
const ANCHOR_DAMPING: f64 = 0.3;

/// Coordinate visiting order for one refinement sweep. Alternating the
/// direction between sweeps cancels the first-order bias a fixed order
/// leaves in how shared residuals are distributed across coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Ascending,
    Descending,
}

/// Per-vehicle beliefs after one tracking step, plus the beam angle for the
/// next step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefSet {
    pub theta: Gaussian,
    pub range: Gaussian,
    pub speed: Gaussian,
    pub beta: ComplexGaussian,
    /// Predicted angle used to steer the next transmission.
    pub theta_pred_rsu: f64,
}

/// Counters for numerical guard events, reported in benchmark summaries.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize)]
pub struct TrackerDiagnostics {
    /// Inverse-trig inputs clamped into (-1, 1).
    pub domain_clamps: u64,
    /// Angle means clamped back into (0, pi).
    pub angle_clamps: u64,
    /// Echo angle messages discarded for leaving the principal phase branch.
    pub branch_discards: u64,
}

impl TrackerDiagnostics {
    pub fn merge(&mut self, other: &TrackerDiagnostics) {
        self.domain_clamps += other.domain_clamps;
        self.angle_clamps += other.angle_clamps;
        self.branch_discards += other.branch_discards;
    }
}

/// Everything a tracker instance needs per step.
#[derive(Debug, Clone)]
pub struct TrackerConfig {
    pub arr: ArrayConfig,
    pub noise: NoiseConfig,
    pub process: ProcessNoise,
    /// Slot duration, seconds.
    pub slot_s: f64,
    /// Transmit power.
    pub power: f64,
    /// Mean-field sweeps per step.
    pub loopy_iters: usize,
    /// When false the delay/Doppler observations are ignored (communication-
    /// only operation).
    pub use_radar_delay_doppler: bool,
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.arr.validate()?;
        self.noise.validate()?;
        self.process.validate()?;
        if self.loopy_iters < 1 {
            return Err(Error::invalid_argument("loopy_iters must be >= 1"));
        }
        if !(self.slot_s > 0.0) {
            return Err(Error::invalid_argument("slot_s must be positive"));
        }
        Ok(())
    }
}

/// Predicted messages for one step.
#[derive(Debug, Clone, Copy)]
pub struct Prediction {
    pub theta: Gaussian,
    pub range: Gaussian,
    pub speed: Gaussian,
    pub beta: ComplexGaussian,
    /// Beam angle implied by the prediction (equals `theta.mean`).
    pub theta_pred: f64,
}

/// Push previous beliefs through the evolution model: means follow the
/// linearized step, variances gain the process noise (the reflection
/// coefficient's prior variance is additionally scaled by the squared growth
/// factor).
pub fn predict(prev: &BeliefSet, process: &ProcessNoise, dt: f64) -> Result<Prediction> {
    if !(prev.range.mean > 0.0) {
        return Err(Error::InvalidState(format!(
            "predicted from non-positive range {}",
            prev.range.mean
        )));
    }
    let lin = evolve_linearized(prev.theta.mean, prev.range.mean, prev.speed.mean, dt);
    let rho = lin.beta_growth;
    Ok(Prediction {
        theta: Gaussian::new(
            lin.theta,
            process.sigma_theta * process.sigma_theta + prev.theta.var,
        ),
        range: Gaussian::new(lin.range, process.sigma_d * process.sigma_d + prev.range.var),
        speed: Gaussian::new(lin.speed, process.sigma_v * process.sigma_v + prev.speed.var),
        beta: ComplexGaussian::new(
            prev.beta.mean * rho,
            process.sigma_beta * process.sigma_beta + rho * rho * prev.beta.var,
        ),
        theta_pred: lin.theta,
    })
}

/// Range belief: fuse the predicted range with the delay likelihood
/// `N(c*tau/2, sigma_tau^2 c^2 / 4)`.
pub fn update_range(pred_range: Gaussian, tau: f64, noise: &NoiseConfig, wave_speed: f64) -> Gaussian {
    let mean = wave_speed * tau / 2.0;
    let sd = noise.sigma_tau * wave_speed / 2.0;
    fuse([pred_range, Gaussian::new(mean, sd * sd)])
}

/// Mean-field message from the Doppler observation to the speed, given the
/// current message on `cos(theta)`.
pub fn doppler_speed_message(
    gamma: f64,
    cos_msg: Gaussian,
    noise: &NoiseConfig,
    doppler_scale: f64,
) -> Gaussian {
    let denom = cos_msg.var + cos_msg.mean * cos_msg.mean;
    if denom <= 0.0 {
        return Gaussian::flat();
    }
    Gaussian::new(
        gamma * cos_msg.mean / (doppler_scale * denom),
        noise.sigma_gamma * noise.sigma_gamma / (doppler_scale * doppler_scale * denom),
    )
}

/// Speed belief: prediction fused with the Doppler mean-field message.
pub fn update_speed(
    pred_speed: Gaussian,
    gamma: f64,
    cos_msg: Gaussian,
    noise: &NoiseConfig,
    doppler_scale: f64,
) -> Gaussian {
    fuse([
        pred_speed,
        doppler_speed_message(gamma, cos_msg, noise, doppler_scale),
    ])
}

/// Angle message from the Doppler observation: mean-field message on
/// `cos(theta)` with speed in the coefficient role, then the cubic arccos
/// series. The series bias near `|cos| -> 1` is tolerated here because this
/// message is variance-dominated; its variance is still inflated by the
/// leading neglected series term so a deterministic input cannot produce a
/// confidently wrong message.
pub fn doppler_angle_message(
    gamma: f64,
    speed_belief: Gaussian,
    noise: &NoiseConfig,
    doppler_scale: f64,
    diag: &mut TrackerDiagnostics,
) -> Gaussian {
    let denom = speed_belief.var + speed_belief.mean * speed_belief.mean;
    if denom <= 0.0 {
        return Gaussian::flat();
    }
    let cos_mf = Gaussian::new(
        gamma * speed_belief.mean / (doppler_scale * denom),
        noise.sigma_gamma * noise.sigma_gamma / (doppler_scale * doppler_scale * denom),
    );
    let mut msg = arccos_taylor(cos_mf, &mut diag.domain_clamps);
    let (m, _) = gaussian::clamp_to_unit(cos_mf.mean);
    let trunc = 3.0 * m.abs().powi(5) / 40.0;
    msg.var += trunc * trunc;
    msg
}

/// Auxiliary phase variables `eps_q`, `q` in `[1 - n_rx, n_tx - 1]`, with
/// `eps_0` pinned at 1.
#[derive(Debug, Clone)]
pub struct EpsilonSet {
    q_lo: i64,
    beliefs: Vec<ComplexGaussian>,
}

impl EpsilonSet {
    /// Initialize every `eps_q` from an angle prediction: moments of
    /// `exp(-j*pi*q*cos(theta))` under the cosine moments of `pred_theta`.
    pub fn from_angle_prediction(pred_theta: Gaussian, arr: &ArrayConfig) -> Self {
        let cos_msg = cos_moments(pred_theta);
        let q_lo = 1 - arr.n_rx as i64;
        let q_hi = arr.n_tx as i64 - 1;
        let beliefs = (q_lo..=q_hi)
            .map(|q| {
                if q == 0 {
                    ComplexGaussian::delta(Complex64::new(1.0, 0.0))
                } else {
                    complex_exp_moments(cos_msg, q)
                }
            })
            .collect();
        EpsilonSet { q_lo, beliefs }
    }

    pub fn q_range(&self) -> impl Iterator<Item = i64> {
        self.q_lo..=(self.q_lo + self.beliefs.len() as i64 - 1)
    }

    fn idx(&self, q: i64) -> usize {
        debug_assert!(q >= self.q_lo);
        (q - self.q_lo) as usize
    }

    pub fn belief(&self, q: i64) -> ComplexGaussian {
        self.beliefs[self.idx(q)]
    }

    fn set(&mut self, q: i64, g: ComplexGaussian) {
        let i = self.idx(q);
        self.beliefs[i] = g;
    }
}

/// Shared per-step echo-model context: conjugated transmit coefficients for
/// the beam actually used, the deterministic amplitude scale and the
/// post-matched-filter noise variance.
#[derive(Debug, Clone)]
pub struct EchoModel {
    /// `conj(a_i(theta_pred))`, one per transmit element.
    pub coeffs: Vec<Complex64>,
    /// Amplitude scale `sqrt(n_tx * n_rx) * sqrt(power)`.
    pub scale: f64,
    /// Total complex noise variance per echo sample.
    pub noise_var: f64,
}

impl EchoModel {
    pub fn new(theta_pred: f64, arr: &ArrayConfig, noise: &NoiseConfig, power: f64) -> Result<Self> {
        let coeffs = crate::signal::steering_vector(theta_pred, arr.n_tx)?
            .into_iter()
            .map(|c| c.conj())
            .collect();
        Ok(EchoModel {
            coeffs,
            scale: arr.array_gain() * power.sqrt(),
            noise_var: noise.echo_noise_var(),
        })
    }

    /// Lift the assumed noise variance to a numerical floor tied to the echo
    /// energy. Exactly-zero noise turns every message into a point mass and
    /// makes fusion of disagreeing messages degenerate; a floor hundreds of
    /// dB below the signal restores honest relative weighting without
    /// affecting any physical operating point.
    fn with_noise_floor(mut self, echo: &EchoSample) -> Self {
        let mean_sq = echo.samples().iter().map(|y| y.norm_sqr()).sum::<f64>()
            / echo.len().max(1) as f64;
        self.noise_var = self.noise_var.max(1e-28 * (1.0 + mean_sq));
        self
    }

    /// Expected noise-free echo at antenna `l` (0-based) under the current
    /// epsilon means, divided by the reflection coefficient:
    /// `S_l = sum_i coeffs[i] * E[eps_{i-l}]`.
    fn antenna_sums(&self, eps: &EpsilonSet, n_rx: usize) -> (Vec<Complex64>, Vec<f64>) {
        let mut sums = vec![Complex64::new(0.0, 0.0); n_rx];
        let mut vars = vec![0.0; n_rx];
        for (l, (s, v)) in sums.iter_mut().zip(vars.iter_mut()).enumerate() {
            for (i, c) in self.coeffs.iter().enumerate() {
                let q = i as i64 - l as i64;
                let b = eps.belief(q);
                *s += c * b.mean;
                *v += b.var;
            }
        }
        (sums, vars)
    }
}

/// One refinement sweep over the auxiliary phase variables.
///
/// Coordinates are visited in ascending `q`; for each, the observation-side
/// message combines, over every echo sample with `i - l = q`, the residual
/// after subtracting the expected contribution of all other terms, divided
/// by the coefficient `scale * beta * a_i(theta_pred)`. The message variance
/// is obtained by marginalizing the uncertain coefficient and the other
/// terms: per antenna,
///
/// ```text
/// var = (noise + var(c) * E|T_l|^2 + |E c|^2 * var(others)) / |E c|^2
/// ```
///
/// with `c` the scaled reflection coefficient and `T_l` the full transmit
/// sum, so an uncertain reflection coefficient yields appropriately humble
/// phase messages instead of overconfident ones. The new belief — prior
/// fused with observation — replaces the old one immediately, so later
/// coordinates see refreshed values; the sequential order makes the sweep
/// contract where a simultaneous update overshoots on shared residuals.
///
/// Returns the observation-side messages (the input to the angle recovery);
/// entries are `None` for the pinned `q = 0` and when the reflection
/// coefficient carries no usable energy, in which case beliefs fall back to
/// the priors.
pub fn update_epsilon(
    echo: &EchoSample,
    beta_belief: ComplexGaussian,
    eps: &mut EpsilonSet,
    priors: &[ComplexGaussian],
    model: &EchoModel,
    order: SweepOrder,
) -> Vec<Option<ComplexGaussian>> {
    let n_rx = echo.len();
    let n_tx = model.coeffs.len();
    debug_assert_eq!(priors.len(), n_tx + n_rx - 1);
    let c_mean = beta_belief.mean * model.scale;
    let c_mean_sq = c_mean.norm_sqr();
    let c_var = model.scale * model.scale * beta_belief.var;
    let mut out: Vec<Option<ComplexGaussian>> = vec![None; n_tx + n_rx - 1];
    // A coefficient mean buried under its own uncertainty carries no usable
    // phase reference.
    if !c_mean_sq.is_finite() || c_mean_sq <= 1e-12 * c_var || c_mean_sq == 0.0 {
        for (slot, q) in ((1 - n_rx as i64)..=(n_tx as i64 - 1)).enumerate() {
            if q != 0 {
                eps.set(q, priors[slot]);
            }
        }
        return out;
    }
    let (mut sums, mut vars) = model.antenna_sums(eps, n_rx);
    let y_over_c: Vec<Complex64> = echo
        .samples()
        .iter()
        .map(|&y| y * c_mean.conj() / c_mean_sq)
        .collect();

    let slots: Vec<usize> = match order {
        SweepOrder::Ascending => (0..n_tx + n_rx - 1).collect(),
        SweepOrder::Descending => (0..n_tx + n_rx - 1).rev().collect(),
    };
    for slot in slots {
        let q = slot as i64 + 1 - n_rx as i64;
        if q == 0 {
            continue;
        }
        let l_min = 0.max(-q) as usize;
        let l_max = (n_rx as i64 - 1).min(n_tx as i64 - 1 - q) as usize;
        let old = eps.belief(q);
        let mut msgs: Vec<ComplexGaussian> = Vec::with_capacity(l_max - l_min + 1);
        for l in l_min..=l_max {
            let i = (q + l as i64) as usize;
            let coeff = model.coeffs[i];
            let mean = coeff.conj() * (y_over_c[l] - (sums[l] - coeff * old.mean));
            let second_moment = sums[l].norm_sqr() + vars[l];
            let others_var = vars[l] - old.var;
            let var =
                (model.noise_var + c_var * second_moment + c_mean_sq * others_var) / c_mean_sq;
            msgs.push(ComplexGaussian::new(mean, var.max(0.0)));
        }
        let obs = fuse_complex(msgs.iter().copied());
        let belief = fuse_complex([priors[slot], obs]);
        for l in l_min..=l_max {
            let i = (q + l as i64) as usize;
            sums[l] += model.coeffs[i] * (belief.mean - old.mean);
            vars[l] += belief.var - old.var;
        }
        eps.set(q, belief);
        out[slot] = Some(obs);
    }
    out
}

/// Prior messages to every `eps_q` from the current angle belief's cosine
/// moments; `q = 0` stays pinned at 1.
///
pub fn epsilon_priors(cos_msg: Gaussian, arr: &ArrayConfig) -> Vec<ComplexGaussian> {
    let q_lo = 1 - arr.n_rx as i64;
    let q_hi = arr.n_tx as i64 - 1;
    (q_lo..=q_hi)
        .map(|q| {
            if q == 0 {
                ComplexGaussian::delta(Complex64::new(1.0, 0.0))
            } else {
                complex_exp_moments(cos_msg, q)
            }
        })
        .collect()
}

/// Reflection-coefficient belief: prediction fused with one mean-field
/// message per receive antenna. For `y[l] = beta * X_l + z`, the message has
/// mean `y[l] conj(E[X_l]) / E[|X_l|^2]` and variance
/// `noise_var / E[|X_l|^2]`, where the second moment accounts for the
/// epsilon uncertainties. Antennas with no expected energy are skipped.
pub fn update_beta(
    echo: &EchoSample,
    eps: &EpsilonSet,
    pred_beta: ComplexGaussian,
    model: &EchoModel,
) -> ComplexGaussian {
    let n_rx = echo.len();
    let (sums, vars) = model.antenna_sums(eps, n_rx);
    let scale2 = model.scale * model.scale;
    let msgs = echo.samples().iter().enumerate().filter_map(|(l, &y)| {
        let x_mean = sums[l] * model.scale;
        let x_second = scale2 * (sums[l].norm_sqr() + vars[l]);
        if x_second <= 0.0 {
            return None;
        }
        Some(ComplexGaussian::new(
            y * x_mean.conj() / x_second,
            model.noise_var / x_second,
        ))
    });
    fuse_complex(std::iter::once(pred_beta).chain(msgs))
}

/// Angle messages recovered from the observation-side epsilon messages.
///
/// Each message is re-centered on the anchor (the cosine of the current
/// angle belief): the anchor phase is divided out, the small residual phase
/// is inverted through [`exp_to_angle_message`], messages leaving the
/// principal branch are discarded, and the cosine-space result is mapped to
/// angle space by linearizing arccos at the anchor.
pub fn epsilon_angle_messages(
    obs: &[Option<ComplexGaussian>],
    q_lo: i64,
    anchor_cos: f64,
    diag: &mut TrackerDiagnostics,
) -> Vec<Gaussian> {
    let (anchor, _) = gaussian::clamp_to_unit(anchor_cos);
    let anchor_theta = anchor.acos();
    let sin_anchor = (1.0 - anchor * anchor).sqrt().max(1e-9);
    let mut out = Vec::new();
    for (slot, msg) in obs.iter().enumerate() {
        let q = q_lo + slot as i64;
        let Some(m) = msg else { continue };
        if q == 0 || !m.var.is_finite() || !(m.mean.norm() > 1e-12) {
            continue;
        }
        let w = std::f64::consts::PI * q as f64;
        let rotated = ComplexGaussian::new(m.mean * Complex64::from_polar(1.0, w * anchor), m.var);
        let Ok(delta) = exp_to_angle_message(rotated, q, &mut diag.domain_clamps) else {
            continue;
        };
        // Principal-branch guard on u = pi*q*delta.
        let u_mean = w * delta.mean;
        let u_sd = w.abs() * delta.var.sqrt();
        if u_mean.abs() + 3.0 * u_sd > std::f64::consts::FRAC_PI_2 {
            diag.branch_discards += 1;
            continue;
        }
        // Cosine-space message N(anchor + delta, var) mapped through the
        // arccos linearization at the anchor.
        out.push(Gaussian::new(
            anchor_theta - delta.mean / sin_anchor,
            delta.var / (sin_anchor * sin_anchor),
        ));
    }
    out
}

/// Fuse prediction, Doppler message and echo angle messages into the angle
/// belief; the mean is clamped into (0, pi).
pub fn angle_belief(
    pred_theta: Gaussian,
    doppler_msg: Gaussian,
    echo_msgs: &[Gaussian],
    diag: &mut TrackerDiagnostics,
) -> Gaussian {
    let fused = fuse(
        std::iter::once(pred_theta)
            .chain(std::iter::once(doppler_msg))
            .chain(echo_msgs.iter().copied()),
    );
    clamp_angle_belief(fused, diag)
}

fn clamp_angle_belief(g: Gaussian, diag: &mut TrackerDiagnostics) -> Gaussian {
    let lo = ANGLE_MARGIN;
    let hi = std::f64::consts::PI - ANGLE_MARGIN;
    if g.mean < lo || g.mean > hi {
        diag.angle_clamps += 1;
        Gaussian::new(g.mean.clamp(lo, hi), g.var)
    } else {
        g
    }
}

/// One tracker instance per vehicle per trial.
#[derive(Debug, Clone)]
pub struct MessagePassingTracker {
    cfg: TrackerConfig,
    diag: TrackerDiagnostics,
}

impl MessagePassingTracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(MessagePassingTracker {
            cfg,
            diag: TrackerDiagnostics::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn diagnostics(&self) -> TrackerDiagnostics {
        self.diag
    }

    /// Run the full per-step schedule and return the new beliefs, including
    /// the beam angle for the next step.
    pub fn track_step(&mut self, prev: &BeliefSet, meas: &Measurement) -> Result<BeliefSet> {
        let cfg = &self.cfg;
        let pred = predict(prev, &cfg.process, cfg.slot_s)?;
        let doppler_scale = cfg.arr.doppler_scale();

        // The echo was transmitted on the beam this tracker predicted.
        let beam = prev.theta_pred_rsu;
        let model = EchoModel::new(beam, &cfg.arr, &cfg.noise, cfg.power)?.with_noise_floor(&meas.echo);

        let range_belief = if cfg.use_radar_delay_doppler {
            update_range(pred.range, meas.tau, &cfg.noise, cfg.arr.wave_speed)
        } else {
            pred.range
        };

        let mut eps = EpsilonSet::from_angle_prediction(pred.theta, &cfg.arr);
        let mut theta_belief = clamp_angle_belief(pred.theta, &mut self.diag);
        let mut beta_belief = pred.beta;
        let mut echo_angle_msgs: Vec<Gaussian> = Vec::new();
        let mut anchor = theta_belief.mean;

        for _ in 0..cfg.loopy_iters {
            // Damped re-centering of the linearization anchor on the
            // refreshed angle estimate. An undamped anchor overshoots: each
            // sweep's phase estimates over-rotate in proportion to the
            // anchor gap, and feeding the full correction back makes the
            // sweeps oscillate with growing amplitude. The anchor keeps the
            // prediction's variance — the belief variance already contains
            // echo information, and feeding it back into the priors lets
            // the loop lock onto its own drift along the null space of the
            // (underdetermined) echo equations.
            anchor += ANCHOR_DAMPING * (theta_belief.mean - anchor);
            let cos_msg = cos_moments(Gaussian::new(anchor, pred.theta.var));
            let priors = epsilon_priors(cos_msg, &cfg.arr);
            let obs = update_epsilon(
                &meas.echo,
                beta_belief,
                &mut eps,
                &priors,
                &model,
                SweepOrder::Ascending,
            );
            beta_belief = update_beta(&meas.echo, &eps, pred.beta, &model);
            echo_angle_msgs = epsilon_angle_messages(
                &obs,
                1 - cfg.arr.n_rx as i64,
                cos_msg.mean,
                &mut self.diag,
            );
            theta_belief = clamp_angle_belief(
                fuse(std::iter::once(pred.theta).chain(echo_angle_msgs.iter().copied())),
                &mut self.diag,
            );
        }

        let cos_to_doppler = cos_moments(theta_belief);
        let (speed_belief, doppler_msg) = if cfg.use_radar_delay_doppler {
            let speed = update_speed(
                pred.speed,
                meas.gamma,
                cos_to_doppler,
                &cfg.noise,
                doppler_scale,
            );
            let msg = doppler_angle_message(
                meas.gamma,
                speed,
                &cfg.noise,
                doppler_scale,
                &mut self.diag,
            );
            (speed, msg)
        } else {
            (pred.speed, Gaussian::flat())
        };

        let theta_final = angle_belief(pred.theta, doppler_msg, &echo_angle_msgs, &mut self.diag);

        let lin = evolve_linearized(
            theta_final.mean,
            range_belief.mean.max(1e-6),
            speed_belief.mean,
            cfg.slot_s,
        );
        let next_beam = lin
            .theta
            .clamp(ANGLE_MARGIN, std::f64::consts::PI - ANGLE_MARGIN);

        Ok(BeliefSet {
            theta: theta_final,
            range: range_belief,
            speed: speed_belief,
            beta: beta_belief,
            theta_pred_rsu: next_beam,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal;
    use approx::assert_relative_eq;

    fn quiet_noise() -> NoiseConfig {
        NoiseConfig {
            sigma_tau: 0.0,
            sigma_gamma: 0.0,
            sigma_y2: 0.0,
            n0: 1.0,
            mf_gain: 64.0,
        }
    }

    fn small_array() -> ArrayConfig {
        ArrayConfig {
            n_tx: 4,
            n_rx: 4,
            m_vehicle: 4,
            carrier_hz: 30e9,
            wave_speed: 3e8,
        }
    }

    const QUIET_PROCESS: ProcessNoise = ProcessNoise {
        sigma_theta: 0.0,
        sigma_d: 0.0,
        sigma_v: 0.0,
        sigma_beta: 0.0,
    };

    fn exact_belief(theta: f64, range: f64, speed: f64, beta: Complex64) -> BeliefSet {
        BeliefSet {
            theta: Gaussian::delta(theta),
            range: Gaussian::delta(range),
            speed: Gaussian::delta(speed),
            beta: ComplexGaussian::delta(beta),
            theta_pred_rsu: theta,
        }
    }

    #[test]
    fn predict_speed_adds_process_noise_variance() {
        let prev = BeliefSet {
            theta: Gaussian::new(0.19740, 1e-6),
            range: Gaussian::new(101.9804, 0.05),
            speed: Gaussian::new(15.0, 0.1),
            beta: ComplexGaussian::new(Complex64::new(0.049, 0.049), 0.2),
            theta_pred_rsu: 0.19740,
        };
        let process = ProcessNoise {
            sigma_theta: 0.0, sigma_d: 0.0, sigma_v: 0.5, sigma_beta: 0.0,
        };
        let p = predict(&prev, &process, 0.02).unwrap();
        assert_relative_eq!(p.speed.mean, 15.0);
        assert_relative_eq!(p.speed.var, 0.35, epsilon = 1e-12);
    }

    #[test]
    fn predict_zero_noise_zero_variance_matches_linearized() {
        let prev = exact_belief(0.19740, 101.9804, 15.0, Complex64::new(0.049, 0.049));
        let p = predict(&prev, &QUIET_PROCESS, 0.02).unwrap();
        let lin = evolve_linearized(0.19740, 101.9804, 15.0, 0.02);
        assert_eq!(p.theta.mean, lin.theta);
        assert_eq!(p.range.mean, lin.range);
        assert_eq!(p.theta.var, 0.0);
        assert_eq!(p.beta.var, 0.0);
        assert_relative_eq!(p.beta.mean.re, 0.049 * lin.beta_growth, epsilon = 1e-15);
    }

    #[test]
    fn predict_zero_speed_keeps_angle() {
        let prev = BeliefSet {
            theta: Gaussian::new(0.4, 0.01),
            range: Gaussian::new(90.0, 0.1),
            speed: Gaussian::new(0.0, 0.0),
            beta: ComplexGaussian::delta(Complex64::new(0.05, 0.0)),
            theta_pred_rsu: 0.4,
        };
        let process = ProcessNoise {
            sigma_theta: 0.02, sigma_d: 0.0, sigma_v: 0.0, sigma_beta: 0.0,
        };
        let p = predict(&prev, &process, 0.02).unwrap();
        assert_eq!(p.theta.mean, 0.4);
        assert_relative_eq!(p.theta.var, 0.01 + 0.0004, epsilon = 1e-15);
    }

    #[test]
    fn predict_rejects_nonpositive_range() {
        let mut prev = exact_belief(0.4, 90.0, 10.0, Complex64::new(0.05, 0.0));
        prev.range = Gaussian::delta(-1.0);
        assert!(predict(&prev, &QUIET_PROCESS, 0.02).is_err());
    }

    #[test]
    fn range_update_hand_case() {
        let noise = NoiseConfig {
            sigma_tau: 0.67e-6,
            ..quiet_noise()
        };
        let belief = update_range(Gaussian::new(100.0, 1.04), 6.8e-7, &noise, 3e8);
        assert_relative_eq!(belief.mean, 100.0002, epsilon = 5e-5);
        assert_relative_eq!(belief.var, 1.03989, epsilon = 5e-6);
    }

    #[test]
    fn range_update_limits() {
        // Vanishing delay noise: belief collapses on the measurement.
        let noise = quiet_noise();
        let belief = update_range(Gaussian::new(100.0, 1.0), 6.8e-7, &noise, 3e8);
        assert_relative_eq!(belief.mean, 102.0, epsilon = 1e-9);
        assert_eq!(belief.var, 0.0);
        // Flat prediction: belief equals the measurement Gaussian.
        let noise = NoiseConfig { sigma_tau: 0.67e-6, ..quiet_noise() };
        let belief = update_range(Gaussian::flat(), 6.8e-7, &noise, 3e8);
        assert_relative_eq!(belief.mean, 102.0, epsilon = 1e-9);
        assert_relative_eq!(belief.var, 10100.25, epsilon = 1e-6);
    }

    #[test]
    fn speed_mf_message_hand_case() {
        let noise = NoiseConfig {
            sigma_gamma: 2000.0,
            ..quiet_noise()
        };
        let msg = doppler_speed_message(2941.7, Gaussian::new(0.98058, 1e-4), &noise, 200.0);
        assert_relative_eq!(msg.mean, 14.998, epsilon = 1e-3);
        assert_relative_eq!(msg.var, 103.98, max_relative = 1e-3);
    }

    #[test]
    fn speed_mf_limits() {
        let noise = quiet_noise();
        // Deterministic cosine at 1: mean reduces to gamma / scale.
        let msg = doppler_speed_message(3000.0, Gaussian::delta(1.0), &noise, 200.0);
        assert_relative_eq!(msg.mean, 15.0);
        assert_eq!(msg.var, 0.0);
        // Huge Doppler noise: message variance blows up, belief stays at the prediction.
        let noise = NoiseConfig { sigma_gamma: 1e12, ..quiet_noise() };
        let belief = update_speed(
            Gaussian::new(12.0, 0.25),
            3000.0,
            Gaussian::new(0.9, 1e-4),
            &noise,
            200.0,
        );
        assert_relative_eq!(belief.mean, 12.0, epsilon = 1e-6);
        assert_relative_eq!(belief.var, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn doppler_angle_message_hand_case() {
        let mut diag = TrackerDiagnostics::default();
        let noise = NoiseConfig {
            sigma_gamma: 2000.0,
            ..quiet_noise()
        };
        let msg = doppler_angle_message(
            2941.7,
            Gaussian::new(15.0, 1e-6),
            &noise,
            200.0,
            &mut diag,
        );
        // Cosine-space mean 0.98058; the cubic series then lands within
        // 0.02 rad of the true angle 0.19740 (series truncation dominates).
        assert!((msg.mean - 0.19740).abs() < 0.02, "mean {}", msg.mean);
        assert!(msg.var > 0.0);
    }

    #[test]
    fn doppler_angle_message_zero_doppler_is_boresight() {
        let mut diag = TrackerDiagnostics::default();
        let noise = NoiseConfig { sigma_gamma: 100.0, ..quiet_noise() };
        let msg = doppler_angle_message(0.0, Gaussian::new(15.0, 0.1), &noise, 200.0, &mut diag);
        assert_relative_eq!(msg.mean, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn doppler_angle_noise_free_inverts_exactly_in_cosine() {
        // Known speed, no noise: the cosine-space mean is gamma / (scale * v).
        let noise = quiet_noise();
        let v = 15.0;
        let theta: f64 = 0.7;
        let gamma = 200.0 * v * theta.cos();
        let denom = v * v;
        let m = gamma * v / (200.0 * denom);
        assert_relative_eq!(m, theta.cos(), epsilon = 1e-12);
        let mut diag = TrackerDiagnostics::default();
        let msg =
            doppler_angle_message(gamma, Gaussian::delta(v), &noise, 200.0, &mut diag);
        // Series evaluation of arccos at cos(0.7) ~ 0.765: small bias remains.
        assert!((msg.mean - theta).abs() < 0.06, "mean {}", msg.mean);
    }

    fn exact_epsilons(theta: f64, arr: &ArrayConfig) -> EpsilonSet {
        let mut eps = EpsilonSet::from_angle_prediction(Gaussian::delta(theta), arr);
        for q in eps.q_range().collect::<Vec<_>>() {
            let w = -std::f64::consts::PI * q as f64 * theta.cos();
            eps.set(q, ComplexGaussian::delta(Complex64::from_polar(1.0, w)));
        }
        eps
    }

    #[test]
    fn beta_update_exact_inversion() {
        // Deterministic correct epsilons, no noise: fused mean equals beta.
        for (n_tx, n_rx) in [(1usize, 1usize), (2, 3), (4, 4)] {
            let arr = ArrayConfig { n_tx, n_rx, ..small_array() };
            let theta = 0.19740;
            let beta = Complex64::new(0.049, 0.049);
            let echo = signal::echo_with_draw(
                beta, theta, theta, 1.0, &arr, &quiet_noise(),
                &signal::NoiseDraw::zero(n_rx),
            )
            .unwrap();
            let model = EchoModel::new(theta, &arr, &quiet_noise(), 1.0).unwrap();
            let eps = exact_epsilons(theta, &arr);
            let belief = update_beta(&echo, &eps, ComplexGaussian::flat(), &model);
            assert_relative_eq!(belief.mean.re, beta.re, epsilon = 1e-12);
            assert_relative_eq!(belief.mean.im, beta.im, epsilon = 1e-12);
            assert_eq!(belief.var, 0.0);
        }
    }

    #[test]
    fn beta_message_information_floor() {
        // Single antenna, epsilons at maximum uncertainty (zero mean, unit
        // variance): the message variance floor is noise_var/(scale^2 * n_tx).
        let arr = ArrayConfig { n_tx: 4, n_rx: 1, ..small_array() };
        let noise = NoiseConfig { sigma_y2: 1.0, mf_gain: 64.0, ..quiet_noise() };
        let model = EchoModel::new(0.3, &arr, &noise, 1.0).unwrap();
        let mut eps = EpsilonSet::from_angle_prediction(Gaussian::delta(0.3), &arr);
        for q in eps.q_range().collect::<Vec<_>>() {
            if q != 0 {
                eps.set(q, ComplexGaussian::new(Complex64::new(0.0, 0.0), 1.0));
            }
        }
        let echo = signal::EchoSample::new(vec![Complex64::new(0.5, 0.1)], 1).unwrap();
        let belief = update_beta(&echo, &eps, ComplexGaussian::flat(), &model);
        // E|X|^2 = scale^2 * (|eps0|^2 + (n_tx - 1)) = 4 * n_tx (scale^2 = n_tx*n_rx).
        let expected_var = noise.echo_noise_var() / (4.0 * 4.0);
        assert_relative_eq!(belief.var, expected_var, epsilon = 1e-12);
    }

    #[test]
    fn beta_belief_precision_is_additive() {
        let arr = small_array();
        let noise = NoiseConfig { sigma_y2: 1.0, mf_gain: 64.0, ..quiet_noise() };
        let theta = 0.19740;
        let beta = Complex64::new(0.049, 0.049);
        let echo = signal::echo_with_draw(
            beta, theta, theta, 1.0, &arr, &noise, &signal::NoiseDraw::zero(4),
        )
        .unwrap();
        let model = EchoModel::new(theta, &arr, &noise, 1.0).unwrap();
        let eps = exact_epsilons(theta, &arr);
        let pred = ComplexGaussian::new(Complex64::new(0.05, 0.05), 0.3);
        let belief = update_beta(&echo, &eps, pred, &model);

        let (sums, vars) = model.antenna_sums(&eps, 4);
        let mut precision = 1.0 / 0.3;
        for l in 0..4 {
            let x2 = model.scale * model.scale * (sums[l].norm_sqr() + vars[l]);
            precision += x2 / noise.echo_noise_var();
        }
        assert_relative_eq!(belief.precision(), precision, max_relative = 1e-12);
    }

    #[test]
    fn epsilon_update_single_element_array() {
        // n_tx = n_rx = 1 leaves only the pinned q = 0; no messages.
        let arr = ArrayConfig { n_tx: 1, n_rx: 1, ..small_array() };
        let model = EchoModel::new(0.3, &arr, &quiet_noise(), 1.0).unwrap();
        let mut eps = EpsilonSet::from_angle_prediction(Gaussian::delta(0.3), &arr);
        assert_eq!(eps.belief(0).mean, Complex64::new(1.0, 0.0));
        let echo = signal::EchoSample::new(vec![Complex64::new(2.0, 0.0)], 1).unwrap();
        let priors = epsilon_priors(Gaussian::delta(0.3f64.cos()), &arr);
        let obs = update_epsilon(
            &echo,
            ComplexGaussian::delta(Complex64::new(0.5, 0.0)),
            &mut eps,
            &priors,
            &model,
            SweepOrder::Ascending,
        );
        assert_eq!(obs.len(), 1);
        assert!(obs[0].is_none());
    }

    #[test]
    fn epsilon_update_residual_inversion() {
        // Known beta, all other epsilons at truth, no noise: each message
        // mean recovers e^{-j pi q cos(theta)}.
        let arr = ArrayConfig { n_tx: 2, n_rx: 2, ..small_array() };
        let theta = 0.19740;
        let beta = Complex64::new(0.049, 0.049);
        let echo = signal::echo_with_draw(
            beta, theta, theta, 1.0, &arr, &quiet_noise(),
            &signal::NoiseDraw::zero(2),
        )
        .unwrap();
        let model = EchoModel::new(theta, &arr, &quiet_noise(), 1.0).unwrap();
        let mut eps = exact_epsilons(theta, &arr);
        // Priors at the exact angle keep the fused beliefs on the truth.
        let priors = epsilon_priors(Gaussian::delta(theta.cos()), &arr);
        let obs = update_epsilon(&echo, ComplexGaussian::delta(beta), &mut eps, &priors, &model, SweepOrder::Ascending);
        for (slot, q) in (-1i64..=1).enumerate() {
            if q == 0 {
                continue;
            }
            let msg = obs[slot].expect("message for populated q");
            let want = Complex64::from_polar(1.0, -std::f64::consts::PI * q as f64 * theta.cos());
            assert_relative_eq!(msg.mean.re, want.re, epsilon = 1e-12);
            assert_relative_eq!(msg.mean.im, want.im, epsilon = 1e-12);
            assert_eq!(msg.var, 0.0);
        }
    }

    #[test]
    fn epsilon_message_bounded_by_inputs() {
        let arr = small_array();
        let noise = NoiseConfig { sigma_y2: 1.0, mf_gain: 64.0, ..quiet_noise() };
        let theta = 0.4;
        let beta = Complex64::new(0.5, -0.2);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let echo = signal::echo_observation(beta, theta, 0.41, 1.0, &arr, &noise, &mut rng).unwrap();
        let model = EchoModel::new(0.41, &arr, &noise, 1.0).unwrap();
        let mut eps = EpsilonSet::from_angle_prediction(Gaussian::new(0.41, 1e-4), &arr);
        let priors = epsilon_priors(cos_moments(Gaussian::new(0.41, 1e-4)), &arr);
        let obs = update_epsilon(&echo, ComplexGaussian::new(beta, 0.1), &mut eps, &priors, &model, SweepOrder::Ascending);
        let c_second = model.scale * model.scale * (beta.norm_sqr() + 0.1);
        let c_norm = (model.scale * beta).norm();
        for (slot, msg) in obs.iter().enumerate() {
            let Some(m) = msg else { continue };
            let q = slot as i64 - 3;
            let count = 4 - q.unsigned_abs() as usize;
            let max_y: f64 = echo.samples().iter().map(|y| y.norm()).fold(0.0, f64::max);
            // Each per-antenna term is (|y| * |c|/E|c|^2 + |others|); crude bound.
            let bound = max_y * c_norm / c_second + (arr.n_tx - 1) as f64 + 1.0;
            assert!(
                m.mean.norm() <= bound,
                "q={q} count={count} mean {} vs bound {bound}",
                m.mean.norm()
            );
        }
    }

    #[test]
    fn angle_belief_prediction_only() {
        let mut diag = TrackerDiagnostics::default();
        let pred = Gaussian::new(0.3, 0.01);
        let belief = angle_belief(pred, Gaussian::flat(), &[], &mut diag);
        assert_eq!(belief.mean, 0.3);
        assert_eq!(belief.var, 0.01);
    }

    #[test]
    fn angle_belief_precision_counts_messages() {
        let mut diag = TrackerDiagnostics::default();
        let pred = Gaussian::new(0.3, 0.01);
        let msgs = vec![Gaussian::new(0.3, 0.01); 3];
        let belief = angle_belief(pred, Gaussian::new(0.3, 0.01), &msgs, &mut diag);
        assert_relative_eq!(belief.mean, 0.3);
        assert_relative_eq!(belief.var, 0.01 / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn angle_belief_never_leaves_open_interval() {
        let mut diag = TrackerDiagnostics::default();
        let belief = angle_belief(
            Gaussian::new(-0.2, 0.01),
            Gaussian::flat(),
            &[],
            &mut diag,
        );
        assert!(belief.mean > 0.0 && belief.mean < std::f64::consts::PI);
        assert_eq!(diag.angle_clamps, 1);
    }

    fn noise_free_cfg(arr: ArrayConfig) -> TrackerConfig {
        TrackerConfig {
            arr,
            noise: quiet_noise(),
            process: QUIET_PROCESS,
            slot_s: 0.02,
            power: 1.0,
            loopy_iters: 5,
            use_radar_delay_doppler: true,
        }
    }

    /// One noise-free step from an exact prior must land on the truth.
    #[test]
    fn noise_free_step_with_exact_prior_tracks_truth() {
        let arr = ArrayConfig { n_tx: 16, n_rx: 16, ..small_array() };
        let mut truth =
            crate::kinematics::VehicleTruth::new(100.0, 20.0, 15.0, Complex64::new(10.0, 10.0))
                .unwrap();
        let mut tracker = MessagePassingTracker::new(noise_free_cfg(arr)).unwrap();
        let mut belief = exact_belief(truth.theta, truth.range, truth.speed, truth.beta);
        belief.theta_pred_rsu =
            evolve_linearized(truth.theta, truth.range, truth.speed, 0.02).theta;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        for _ in 0..20 {
            truth = crate::kinematics::step_truth(&truth, 0.02, &QUIET_PROCESS, &mut rng);
            let meas = crate::kinematics::measurement_with_draw(
                &truth,
                belief.theta_pred_rsu,
                1.0,
                &arr,
                &quiet_noise(),
                &signal::NoiseDraw::zero(arr.n_rx),
            )
            .unwrap();
            belief = tracker.track_step(&belief, &meas).unwrap();
            assert!(
                (belief.theta.mean - truth.theta).abs() < 1e-3,
                "theta err {}",
                (belief.theta.mean - truth.theta).abs()
            );
            assert!((belief.range.mean - truth.range).abs() < 1e-2);
            assert!((belief.speed.mean - truth.speed).abs() < 1e-2);
        }
    }

    /// Noise-free measurements with a perturbed prior: the echo pulls the
    /// angle belief onto the truth within one step, across the operating
    /// range of angles.
    #[test]
    fn noise_free_step_recovers_truth_from_perturbed_prior() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        for &theta_deg in &[11.31f64, 30.0, 60.0] {
            let theta = theta_deg.to_radians();
            let range = 20.0 / theta.sin();
            let x = range * theta.cos();
            let arr = ArrayConfig { n_tx: 16, n_rx: 16, ..small_array() };
            let prev_truth =
                crate::kinematics::VehicleTruth::new(x, 20.0, 15.0, Complex64::new(10.0, 10.0))
                    .unwrap();
            let mut tracker = MessagePassingTracker::new(noise_free_cfg(arr)).unwrap();

            // Perturbed prior with honest spread around the pre-step truth;
            // the beam points where the perturbed prior predicts.
            let prior_theta = prev_truth.theta + 2e-3;
            let prior = BeliefSet {
                theta: Gaussian::new(prior_theta, 4e-6),
                range: Gaussian::new(prev_truth.range + 0.3, 0.4),
                speed: Gaussian::new(prev_truth.speed - 0.8, 2.5),
                beta: ComplexGaussian::new(prev_truth.beta * 1.2, 1.0),
                theta_pred_rsu: evolve_linearized(
                    prior_theta,
                    prev_truth.range + 0.3,
                    prev_truth.speed - 0.8,
                    0.02,
                )
                .theta,
            };
            let truth = crate::kinematics::step_truth(&prev_truth, 0.02, &QUIET_PROCESS, &mut rng);
            let meas = crate::kinematics::measurement_with_draw(
                &truth,
                prior.theta_pred_rsu,
                1.0,
                &arr,
                &quiet_noise(),
                &signal::NoiseDraw::zero(arr.n_rx),
            )
            .unwrap();
            let belief = tracker.track_step(&prior, &meas).unwrap();
            assert!(
                (belief.theta.mean - truth.theta).abs() < 1e-3,
                "theta {theta_deg} deg: err {}",
                (belief.theta.mean - truth.theta).abs()
            );
        }
    }

    #[test]
    fn infinite_measurement_noise_returns_prediction() {
        let arr = small_array();
        let noise = NoiseConfig {
            sigma_tau: 1e15,
            sigma_gamma: 1e15,
            sigma_y2: 1e30,
            n0: 1.0,
            mf_gain: 1.0,
        };
        let cfg = TrackerConfig {
            arr,
            noise,
            process: ProcessNoise {
                sigma_theta: 3.5e-4,
                sigma_d: 0.2,
                sigma_v: 0.5,
                sigma_beta: 1.0,
            },
            slot_s: 0.02,
            power: 1.0,
            loopy_iters: 3,
            use_radar_delay_doppler: true,
        };
        let truth =
            crate::kinematics::VehicleTruth::new(100.0, 20.0, 15.0, Complex64::new(10.0, 10.0))
                .unwrap();
        let prev = BeliefSet {
            theta: Gaussian::new(truth.theta, 1e-6),
            range: Gaussian::new(truth.range, 0.4),
            speed: Gaussian::new(truth.speed, 2.5),
            beta: ComplexGaussian::new(truth.beta, 1.0),
            theta_pred_rsu: truth.theta,
        };
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let meas = crate::kinematics::generate_measurements(
            &truth, prev.theta_pred_rsu, 1.0, &arr, &cfg.noise, &mut rng,
        )
        .unwrap();
        let pred = predict(&prev, &cfg.process, 0.02).unwrap();
        let mut tracker = MessagePassingTracker::new(cfg).unwrap();
        let belief = tracker.track_step(&prev, &meas).unwrap();
        assert_relative_eq!(belief.theta.mean, pred.theta.mean, epsilon = 1e-4);
        assert_relative_eq!(belief.theta.var, pred.theta.var, max_relative = 1e-2);
        assert_relative_eq!(belief.range.mean, pred.range.mean, max_relative = 1e-4);
        assert_relative_eq!(belief.speed.mean, pred.speed.mean, epsilon = 1e-3);
    }

    #[test]
    fn track_step_is_deterministic() {
        let arr = small_array();
        let noise = NoiseConfig {
            sigma_tau: 0.67e-6,
            sigma_gamma: 2000.0,
            sigma_y2: 1.0,
            n0: 1.0,
            mf_gain: 64.0,
        };
        let cfg = TrackerConfig {
            arr,
            noise,
            process: ProcessNoise {
                sigma_theta: 3.5e-4,
                sigma_d: 0.2,
                sigma_v: 0.5,
                sigma_beta: 1.0,
            },
            slot_s: 0.02,
            power: 1.0,
            loopy_iters: 5,
            use_radar_delay_doppler: true,
        };
        let truth =
            crate::kinematics::VehicleTruth::new(90.0, 20.0, 12.0, Complex64::new(10.0, 10.0))
                .unwrap();
        let prev = BeliefSet {
            theta: Gaussian::new(truth.theta + 1e-4, 1.2e-6),
            range: Gaussian::new(truth.range - 0.1, 0.4),
            speed: Gaussian::new(truth.speed + 0.2, 2.5),
            beta: ComplexGaussian::new(truth.beta, 1.0),
            theta_pred_rsu: truth.theta + 1e-4,
        };
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
        let meas = crate::kinematics::generate_measurements(
            &truth, prev.theta_pred_rsu, 1.0, &arr, &cfg.noise, &mut rng,
        )
        .unwrap();
        let mut t1 = MessagePassingTracker::new(cfg.clone()).unwrap();
        let mut t2 = MessagePassingTracker::new(cfg).unwrap();
        let b1 = t1.track_step(&prev, &meas).unwrap();
        let b2 = t2.track_step(&prev, &meas).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn variances_stay_finite_and_nonnegative_under_noise() {
        let arr = small_array();
        let noise = NoiseConfig {
            sigma_tau: 0.67e-6,
            sigma_gamma: 2000.0,
            sigma_y2: 1.0,
            n0: 1.0,
            mf_gain: 64.0,
        };
        let process = ProcessNoise {
            sigma_theta: 3.5e-4,
            sigma_d: 0.2,
            sigma_v: 0.5,
            sigma_beta: 1.0,
        };
        let cfg = TrackerConfig {
            arr,
            noise,
            process,
            slot_s: 0.02,
            power: 1.0,
            loopy_iters: 5,
            use_radar_delay_doppler: true,
        };
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(17);
        let mut truth =
            crate::kinematics::VehicleTruth::new(100.0, 20.0, 15.0, Complex64::new(10.0, 10.0))
                .unwrap();
        let mut tracker = MessagePassingTracker::new(cfg.clone()).unwrap();
        let mut belief = BeliefSet {
            theta: Gaussian::new(truth.theta, 1.2e-6),
            range: Gaussian::new(truth.range, 0.4),
            speed: Gaussian::new(truth.speed, 2.5),
            beta: ComplexGaussian::new(truth.beta, 10.0),
            theta_pred_rsu: truth.theta,
        };
        for _ in 0..20 {
            truth = crate::kinematics::step_truth(&truth, 0.02, &process, &mut rng);
            let meas = crate::kinematics::generate_measurements(
                &truth, belief.theta_pred_rsu, 1.0, &arr, &cfg.noise, &mut rng,
            )
            .unwrap();
            let pred = predict(&belief, &process, 0.02).unwrap();
            belief = tracker.track_step(&belief, &meas).unwrap();
            for v in [belief.theta.var, belief.range.var, belief.speed.var, belief.beta.var] {
                assert!(v.is_finite() && v >= 0.0, "variance {v}");
            }
            // Fusion never loses information relative to the prediction.
            assert!(belief.theta.var <= pred.theta.var * (1.0 + 1e-12));
            assert!(belief.range.var <= pred.range.var * (1.0 + 1e-12));
            assert!(belief.speed.var <= pred.speed.var * (1.0 + 1e-12));
        }
    }
}
