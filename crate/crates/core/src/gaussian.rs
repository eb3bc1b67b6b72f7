//! Parametric Gaussian messages and the nonlinear moment transforms used by
//! the tracker.
//!
//! Messages and beliefs are all (mean, variance) pairs: [`Gaussian`] for real
//! variables and [`ComplexGaussian`] for circularly-symmetric complex ones
//! (`var` is the total complex variance). The transforms map Gaussians through
//! the nonlinearities of the echo model:
//!
//! * `cos_moments`      — exact moments of `cos(X)` via the characteristic function,
//! * `arccos_taylor` / `arcsin_taylor` — cubic-series inverse trigs with exact
//!   polynomial moment propagation,
//! * `complex_exp_moments` — exact moments of `exp(-j*pi*q*X)`,
//! * `exp_to_angle_message` — the reverse direction: recover a Gaussian on `x`
//!   from a complex Gaussian on `exp(-j*pi*q*x)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Margin used when clamping means into the open interval (-1, 1) before an
/// inverse trigonometric transform.
pub const UNIT_CLAMP_MARGIN: f64 = 1e-9;

/// Real Gaussian message/belief with mean and variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: f64,
    pub var: f64,
}

impl Gaussian {
    pub fn new(mean: f64, var: f64) -> Self {
        debug_assert!(var >= 0.0, "negative variance {var}");
        Gaussian { mean, var }
    }

    /// Uninformative (infinite-variance) message.
    pub fn flat() -> Self {
        Gaussian {
            mean: 0.0,
            var: f64::INFINITY,
        }
    }

    /// Zero-variance message pinned at `mean`.
    pub fn delta(mean: f64) -> Self {
        Gaussian { mean, var: 0.0 }
    }

    /// Inverse variance; 0 for flat messages, infinite for deltas.
    pub fn precision(&self) -> f64 {
        if self.var == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.var
        }
    }

    pub fn is_informative(&self) -> bool {
        self.var.is_finite()
    }
}

/// Circularly-symmetric complex Gaussian; `var` is the total complex variance
/// (split evenly between real and imaginary parts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexGaussian {
    pub mean: Complex64,
    pub var: f64,
}

impl ComplexGaussian {
    pub fn new(mean: Complex64, var: f64) -> Self {
        debug_assert!(var >= 0.0, "negative variance {var}");
        ComplexGaussian { mean, var }
    }

    pub fn flat() -> Self {
        ComplexGaussian {
            mean: Complex64::new(0.0, 0.0),
            var: f64::INFINITY,
        }
    }

    pub fn delta(mean: Complex64) -> Self {
        ComplexGaussian { mean, var: 0.0 }
    }

    pub fn precision(&self) -> f64 {
        if self.var == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.var
        }
    }

    pub fn is_informative(&self) -> bool {
        self.var.is_finite()
    }
}

/// Product of two Gaussian densities, renormalized: precisions add and the
/// mean is the precision-weighted average.
///
/// Zero-variance inputs act as point masses and dominate the product; two
/// point masses yield the average of their means. Fails if neither factor
/// carries information.
pub fn product(a: Gaussian, b: Gaussian) -> Result<Gaussian> {
    if !a.is_informative() && !b.is_informative() {
        return Err(Error::NoInformation(
            "product of two infinite-variance messages".into(),
        ));
    }
    Ok(fuse([a, b].iter().copied()))
}

/// Precision-weighted fusion of any number of Gaussian messages.
///
/// Flat (infinite-variance) messages contribute nothing. Point masses
/// dominate; several point masses fuse to the mean of their locations. An
/// empty or all-flat input yields a flat message.
pub fn fuse(messages: impl IntoIterator<Item = Gaussian>) -> Gaussian {
    let mut delta_sum = 0.0;
    let mut delta_count = 0usize;
    let mut weighted_mean = 0.0;
    let mut precision_sum = 0.0;
    for g in messages {
        if g.var == 0.0 {
            delta_sum += g.mean;
            delta_count += 1;
        } else if g.var.is_finite() {
            let w = 1.0 / g.var;
            weighted_mean += w * g.mean;
            precision_sum += w;
        }
    }
    if delta_count > 0 {
        return Gaussian::delta(delta_sum / delta_count as f64);
    }
    if precision_sum == 0.0 {
        return Gaussian::flat();
    }
    Gaussian::new(weighted_mean / precision_sum, 1.0 / precision_sum)
}

/// Complex counterpart of [`fuse`].
pub fn fuse_complex(messages: impl IntoIterator<Item = ComplexGaussian>) -> ComplexGaussian {
    let mut delta_sum = Complex64::new(0.0, 0.0);
    let mut delta_count = 0usize;
    let mut weighted_mean = Complex64::new(0.0, 0.0);
    let mut precision_sum = 0.0;
    for g in messages {
        if g.var == 0.0 {
            delta_sum += g.mean;
            delta_count += 1;
        } else if g.var.is_finite() {
            let w = 1.0 / g.var;
            weighted_mean += g.mean * w;
            precision_sum += w;
        }
    }
    if delta_count > 0 {
        return ComplexGaussian::delta(delta_sum / delta_count as f64);
    }
    if precision_sum == 0.0 {
        return ComplexGaussian::flat();
    }
    ComplexGaussian::new(weighted_mean / precision_sum, 1.0 / precision_sum)
}

/// Raw moments E[X^k] for X ~ N(mean, var), k = 0..=k_max.
///
/// Uses the recurrence M_k = mean*M_{k-1} + (k-1)*var*M_{k-2}.
pub fn gaussian_raw_moments(mean: f64, var: f64, k_max: usize) -> Vec<f64> {
    let mut m = Vec::with_capacity(k_max + 1);
    m.push(1.0);
    if k_max >= 1 {
        m.push(mean);
    }
    for k in 2..=k_max {
        let v = mean * m[k - 1] + (k - 1) as f64 * var * m[k - 2];
        m.push(v);
    }
    m
}

/// Exact E[p(X)] and E[p(X)^2] for a polynomial `coeffs[k] * x^k` and
/// X ~ N(g.mean, g.var).
pub fn poly_gauss_moments(coeffs: &[f64], g: Gaussian) -> (f64, f64) {
    let deg = coeffs.len().saturating_sub(1);
    let moments = gaussian_raw_moments(g.mean, g.var, 2 * deg);
    let mean: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * moments[k])
        .sum();
    // Coefficients of p(x)^2 by convolution.
    let mut sq = vec![0.0; 2 * deg + 1];
    for (i, a) in coeffs.iter().enumerate() {
        for (j, b) in coeffs.iter().enumerate() {
            sq[i + j] += a * b;
        }
    }
    let second: f64 = sq.iter().enumerate().map(|(k, c)| c * moments[k]).sum();
    (mean, second)
}

/// Gaussian transform of a polynomial: mean E[p(X)] and variance
/// E[p(X)^2] - E[p(X)]^2 (clamped at zero against rounding).
fn poly_transform(coeffs: &[f64], g: Gaussian) -> Gaussian {
    let (mean, second) = poly_gauss_moments(coeffs, g);
    Gaussian::new(mean, (second - mean * mean).max(0.0))
}

/// Moments of `cos(X)` for X ~ N(m, v), using the Gaussian characteristic
/// function: E[cos X] = cos(m) e^{-v/2}, E[cos^2 X] = (1 + cos(2m) e^{-2v})/2.
pub fn cos_moments(g: Gaussian) -> Gaussian {
    let mean = g.mean.cos() * (-g.var / 2.0).exp();
    let second = 0.5 * (1.0 + (2.0 * g.mean).cos() * (-2.0 * g.var).exp());
    Gaussian::new(mean, (second - mean * mean).max(0.0))
}

/// Clamp a value into the open interval (-1+margin, 1-margin).
///
/// Returns the clamped value and whether clamping occurred; callers maintain
/// a diagnostic counter from the flag.
pub fn clamp_to_unit(x: f64) -> (f64, bool) {
    let lim = 1.0 - UNIT_CLAMP_MARGIN;
    if x > lim {
        (lim, true)
    } else if x < -lim {
        (-lim, true)
    } else {
        (x, false)
    }
}

/// Series coefficients of `arccos x ~ pi/2 - x - x^3/6`.
const ARCCOS_COEFFS: [f64; 4] = [std::f64::consts::FRAC_PI_2, -1.0, 0.0, -1.0 / 6.0];
/// Series coefficients of `arcsin x ~ x + x^3/6`.
const ARCSIN_COEFFS: [f64; 4] = [0.0, 1.0, 0.0, 1.0 / 6.0];

/// Gaussian on `theta = arccos(x)` from a Gaussian on `x`, using the cubic
/// series `pi/2 - x - x^3/6` with exact polynomial moment propagation.
///
/// The series is accurate near `x = 0` only; the truncation grows quickly as
/// `|x|` approaches 1. Means with `|m| >= 1` are clamped into the principal
/// domain and counted via `clamps`.
pub fn arccos_taylor(g: Gaussian, clamps: &mut u64) -> Gaussian {
    let (m, clamped) = clamp_to_unit(g.mean);
    if clamped {
        *clamps += 1;
    }
    poly_transform(&ARCCOS_COEFFS, Gaussian::new(m, g.var))
}

/// Gaussian on `theta = arcsin(x)`, series `x + x^3/6`; same conventions as
/// [`arccos_taylor`].
pub fn arcsin_taylor(g: Gaussian, clamps: &mut u64) -> Gaussian {
    let (m, clamped) = clamp_to_unit(g.mean);
    if clamped {
        *clamps += 1;
    }
    poly_transform(&ARCSIN_COEFFS, Gaussian::new(m, g.var))
}

/// Leading neglected series term of the cubic inverse-trig expansions,
/// `3|x|^5/40`, used as a truncation-error scale when re-weighting the two
/// recovery paths in [`exp_to_angle_message`].
fn trig_truncation(x: f64) -> f64 {
    let a = x.abs();
    3.0 * a.powi(5) / 40.0
}

/// Moments of `eps = exp(-j*pi*q*X)` for X ~ N(m, v):
/// mean `e^{-(pi q)^2 v / 2} e^{-j pi q m}`, total variance
/// `1 - e^{-(pi q)^2 v}`. The second moment is exactly 1 (unit modulus).
pub fn complex_exp_moments(g: Gaussian, q: i64) -> ComplexGaussian {
    let w = std::f64::consts::PI * q as f64;
    let damp = (-w * w * g.var / 2.0).exp();
    let phase = Complex64::from_polar(1.0, -w * g.mean);
    let mean = phase * damp;
    let var = (1.0 - damp * damp).max(0.0);
    ComplexGaussian::new(mean, var)
}

/// Recover a Gaussian on `x` from a complex Gaussian on `eps = e^{-j*pi*q*x}`.
///
/// `u = pi*q*x` is estimated twice: from `arccos(Re eps)` and from
/// `arcsin(-Im eps)`. Each path propagates half the complex variance through
/// its cubic series and is additionally inflated by the square of its leading
/// neglected series term, so the path operating far from its expansion point
/// is down-weighted in the fusion. The arccos path only determines `|u|`; its
/// sign is taken from the arcsin path. Valid on the principal branch
/// (`|u| <= pi/2`); callers re-center around a predicted phase first and
/// discard out-of-branch messages.
///
/// Component means outside [-1, 1] are clamped and counted via `clamps`.
pub fn exp_to_angle_message(
    msg: ComplexGaussian,
    q: i64,
    clamps: &mut u64,
) -> Result<Gaussian> {
    if q == 0 {
        return Err(Error::invalid_argument(
            "exp_to_angle_message requires q != 0",
        ));
    }
    let norm = msg.mean.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::invalid_argument(
            "exp_to_angle_message requires a nonzero finite mean",
        ));
    }
    let half_var = msg.var / 2.0;

    let (re, re_clamped) = clamp_to_unit(msg.mean.re);
    let (neg_im, im_clamped) = clamp_to_unit(-msg.mean.im);
    if re_clamped {
        *clamps += 1;
    }
    if im_clamped {
        *clamps += 1;
    }

    let mut u_cos = poly_transform(&ARCCOS_COEFFS, Gaussian::new(re, half_var));
    let mut u_sin = poly_transform(&ARCSIN_COEFFS, Gaussian::new(neg_im, half_var));
    let t_cos = trig_truncation(re);
    let t_sin = trig_truncation(neg_im);
    u_cos.var += t_cos * t_cos;
    u_sin.var += t_sin * t_sin;
    // arccos yields |u|; resolve the sign from the arcsin estimate.
    if u_sin.mean < 0.0 {
        u_cos.mean = -u_cos.mean;
    }

    let u = fuse([u_cos, u_sin]);
    let scale = std::f64::consts::PI * q as f64;
    Ok(Gaussian::new(u.mean / scale, u.var / (scale * scale)))
}
