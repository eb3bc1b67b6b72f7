//! Array geometry, radar echo synthesis and the communication SNR/rate model.
//!
//! The RSU carries a uniform linear array with `n_tx` transmit and `n_rx`
//! receive elements; each vehicle has an `m_vehicle`-element array. Steering
//! phases follow the half-wavelength ULA convention, element `i` of the
//! steering vector being `exp(-j*pi*(i-1)*cos(theta))`.
//!
//! After matched filtering, one tracking step observes, per vehicle:
//! a delay `tau = 2 d / c`, a Doppler `gamma = 2 v cos(theta) f_c / c`
//! and one complex echo sample per receive antenna,
//!
//! ```text
//! y[l] = s * beta * sqrt(e) * conj(b_l(theta)) * conj(a(theta)^H a(theta_pred)) + z[l]
//! ```
//!
//! with `s = sqrt(n_tx * n_rx)` the array gain and `z` circularly-symmetric
//! complex noise of total variance `sigma_y^2 / G` (the matched-filter gain
//! `G` scales the noise down). The conjugated receive phases keep the echo
//! consistent with the auxiliary-exponent convention
//! `eps_q = exp(-j*pi*q*cos(theta))`, `q = i - l`, used by the tracker:
//! `y[l] = s*beta*sqrt(e) * sum_i conj(a_i(theta_pred)) * eps_{i-l} + z[l]`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};

/// Antenna counts and propagation constants for the RSU/vehicle arrays.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ArrayConfig {
    /// RSU transmit elements.
    pub n_tx: usize,
    /// RSU receive elements.
    pub n_rx: usize,
    /// Vehicle-side elements.
    pub m_vehicle: usize,
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
    /// Propagation speed in m/s.
    pub wave_speed: f64,
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tx < 1 || self.n_rx < 1 || self.m_vehicle < 1 {
            return Err(Error::invalid_argument("antenna counts must be >= 1"));
        }
        if !(self.carrier_hz > 0.0) || !(self.wave_speed > 0.0) {
            return Err(Error::invalid_argument(
                "carrier_hz and wave_speed must be positive",
            ));
        }
        Ok(())
    }

    /// Doppler scale 2 f_c / c mapping radial speed to frequency shift.
    pub fn doppler_scale(&self) -> f64 {
        2.0 * self.carrier_hz / self.wave_speed
    }

    /// Total transmit-receive array gain sqrt(n_tx * n_rx).
    pub fn array_gain(&self) -> f64 {
        ((self.n_tx * self.n_rx) as f64).sqrt()
    }
}

/// Measurement-noise levels and the matched-filter SNR gain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoiseConfig {
    /// Delay noise standard deviation in seconds.
    pub sigma_tau: f64,
    /// Doppler noise standard deviation in Hz.
    pub sigma_gamma: f64,
    /// Echo noise total complex variance before matched-filter gain.
    pub sigma_y2: f64,
    /// Communication noise power spectral density.
    pub n0: f64,
    /// Matched-filter SNR gain G (number of symbols integrated).
    pub mf_gain: f64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_tau", self.sigma_tau),
            ("sigma_gamma", self.sigma_gamma),
            ("sigma_y2", self.sigma_y2),
            ("n0", self.n0),
            ("mf_gain", self.mf_gain),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid_argument(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.mf_gain <= 0.0 {
            return Err(Error::invalid_argument("mf_gain must be positive"));
        }
        Ok(())
    }

    /// Total complex variance of one echo sample after matched filtering.
    pub fn echo_noise_var(&self) -> f64 {
        self.sigma_y2 / self.mf_gain
    }
}

/// One step's per-antenna filtered echo samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoSample {
    y: Vec<Complex64>,
}

impl EchoSample {
    pub fn new(y: Vec<Complex64>, n_rx: usize) -> Result<Self> {
        if y.len() != n_rx {
            return Err(Error::invalid_argument(format!(
                "echo sample has {} entries, expected n_rx = {n_rx}",
                y.len()
            )));
        }
        Ok(EchoSample { y })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !theta.is_finite() {
        return Err(Error::invalid_argument(format!(
            "angle must be finite, got {theta}"
        )));
    }
    if theta <= 0.0 || theta >= std::f64::consts::PI {
        return Err(Error::invalid_argument(format!(
            "angle must lie in (0, pi), got {theta}"
        )));
    }
    Ok(())
}

/// ULA steering vector toward `theta`: element `i` (1-based) is
/// `exp(-j*pi*(i-1)*cos(theta))`.
pub fn steering_vector(theta: f64, n: usize) -> Result<Vec<Complex64>> {
    check_angle(theta)?;
    if n < 1 {
        return Err(Error::invalid_argument("steering vector needs n >= 1"));
    }
    let c = theta.cos();
    Ok((0..n)
        .map(|k| Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 * c))
        .collect())
}

/// Geometric sum `sum_{k=0}^{n-1} exp(j*pi*k*x)` — the unnormalized array
/// (Dirichlet) gain between two beams separated by `x` in cosine space.
pub fn dirichlet_gain(x: f64, n: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let step = std::f64::consts::PI * x;
    for k in 0..n {
        acc += Complex64::from_polar(1.0, step * k as f64);
    }
    acc
}

/// Inner product `a(theta_a)^H a(theta_b)` of two `n`-element steering
/// vectors; magnitude peaks at `n` when the cosines coincide.
pub fn steering_inner(theta_a: f64, theta_b: f64, n: usize) -> Complex64 {
    dirichlet_gain(theta_a.cos() - theta_b.cos(), n)
}

/// Delay observation `2 d / c + noise`.
pub fn delay_measurement(
    d: f64,
    arr: &ArrayConfig,
    noise: &NoiseConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid_argument(format!(
            "range must be positive, got {d}"
        )));
    }
    let z = if noise.sigma_tau > 0.0 {
        Normal::new(0.0, noise.sigma_tau).unwrap().sample(rng)
    } else {
        0.0
    };
    Ok(2.0 * d / arr.wave_speed + z)
}

/// Doppler observation `2 v cos(theta) f_c / c + noise`.
pub fn doppler_measurement(
    v: f64,
    theta: f64,
    arr: &ArrayConfig,
    noise: &NoiseConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::invalid_argument("speed must be finite"));
    }
    check_angle(theta)?;
    let z = if noise.sigma_gamma > 0.0 {
        Normal::new(0.0, noise.sigma_gamma).unwrap().sample(rng)
    } else {
        0.0
    };
    Ok(arr.doppler_scale() * v * theta.cos() + z)
}

/// Noise-free echo samples for a vehicle at `theta_true` illuminated by a
/// beam pointed at `theta_pred`.
pub fn echo_clean(
    beta: Complex64,
    theta_true: f64,
    theta_pred: f64,
    power: f64,
    arr: &ArrayConfig,
) -> Result<Vec<Complex64>> {
    check_angle(theta_true)?;
    check_angle(theta_pred)?;
    if !(power >= 0.0) {
        return Err(Error::invalid_argument("power must be nonnegative"));
    }
    let cos_t = theta_true.cos();
    // conj(a^H(theta) a(theta_pred)) = dirichlet(cos_pred - cos_true).
    let inner = dirichlet_gain(theta_pred.cos() - cos_t, arr.n_tx);
    let scale = arr.array_gain() * power.sqrt();
    Ok((0..arr.n_rx)
        .map(|l| {
            let rx_phase = Complex64::from_polar(1.0, std::f64::consts::PI * l as f64 * cos_t);
            beta * scale * rx_phase * inner
        })
        .collect())
}

/// Standard-normal noise draws for one measurement bundle, kept separate so
/// noise realizations can be shared between measurement streams that differ
/// only in noise scale or beam pointing.
#[derive(Debug, Clone)]
pub struct NoiseDraw {
    pub z_tau: f64,
    pub z_gamma: f64,
    /// Unit-total-variance complex draws, one per receive antenna.
    pub z_echo: Vec<Complex64>,
}

impl NoiseDraw {
    pub fn sample(n_rx: usize, rng: &mut impl Rng) -> Self {
        let unit = Normal::new(0.0, 1.0).unwrap();
        let half = std::f64::consts::FRAC_1_SQRT_2;
        NoiseDraw {
            z_tau: unit.sample(rng),
            z_gamma: unit.sample(rng),
            z_echo: (0..n_rx)
                .map(|_| Complex64::new(unit.sample(rng) * half, unit.sample(rng) * half))
                .collect(),
        }
    }

    pub fn zero(n_rx: usize) -> Self {
        NoiseDraw {
            z_tau: 0.0,
            z_gamma: 0.0,
            z_echo: vec![Complex64::new(0.0, 0.0); n_rx],
        }
    }
}

/// Echo samples with circularly-symmetric complex noise of total variance
/// `sigma_y^2 / G` per antenna.
pub fn echo_observation(
    beta: Complex64,
    theta_true: f64,
    theta_pred: f64,
    power: f64,
    arr: &ArrayConfig,
    noise: &NoiseConfig,
    rng: &mut impl Rng,
) -> Result<EchoSample> {
    let draw = NoiseDraw::sample(arr.n_rx, rng);
    echo_with_draw(beta, theta_true, theta_pred, power, arr, noise, &draw)
}

/// Deterministic variant of [`echo_observation`] taking pre-drawn noise.
pub fn echo_with_draw(
    beta: Complex64,
    theta_true: f64,
    theta_pred: f64,
    power: f64,
    arr: &ArrayConfig,
    noise: &NoiseConfig,
    draw: &NoiseDraw,
) -> Result<EchoSample> {
    let clean = echo_clean(beta, theta_true, theta_pred, power, arr)?;
    let sigma = noise.echo_noise_var().sqrt();
    let y = clean
        .iter()
        .zip(&draw.z_echo)
        .map(|(c, z)| c + z * sigma)
        .collect();
    EchoSample::new(y, arr.n_rx)
}

/// Pathloss magnitude that calibrates the perfectly-aligned downlink SNR to
/// `nominal_snr_db`.
pub fn pathloss_for_nominal_snr(
    nominal_snr_db: f64,
    power: f64,
    arr: &ArrayConfig,
    noise: &NoiseConfig,
) -> f64 {
    let snr_lin = 10f64.powf(nominal_snr_db / 10.0);
    let full_gain = (arr.n_tx * arr.m_vehicle) as f64;
    (snr_lin * noise.n0 / (power * full_gain * full_gain)).sqrt()
}

/// Downlink SNR (linear) for a vehicle at `theta_true` when the RSU beams
/// toward `theta_pred_rsu` and the vehicle points its receive beam toward
/// `theta_pred_vehicle`.
///
/// Beamformers are unit-norm, so each side contributes a normalized gain in
/// [0, 1] and the SNR is maximized at perfect alignment; the explicit array
/// gains and the pathloss `alpha` set the absolute scale.
pub fn received_snr(
    theta_true: f64,
    theta_pred_rsu: f64,
    theta_pred_vehicle: f64,
    alpha: Complex64,
    power: f64,
    arr: &ArrayConfig,
    noise: &NoiseConfig,
) -> Result<f64> {
    check_angle(theta_true)?;
    check_angle(theta_pred_rsu)?;
    check_angle(theta_pred_vehicle)?;
    let tx = steering_inner(theta_true, theta_pred_rsu, arr.n_tx).norm() / arr.n_tx as f64;
    let rx = steering_inner(theta_true, theta_pred_vehicle, arr.m_vehicle).norm()
        / arr.m_vehicle as f64;
    let full_gain = (arr.n_tx * arr.m_vehicle) as f64;
    let amplitude = alpha.norm() * full_gain * tx * rx;
    Ok(power * amplitude * amplitude / noise.n0)
}

/// Achievable sum rate `sum_k log2(1 + SNR_k)` in bps/Hz.
pub fn sum_rate(snrs: &[f64]) -> f64 {
    snrs.iter().map(|&s| (1.0 + s).log2()).sum()
}
