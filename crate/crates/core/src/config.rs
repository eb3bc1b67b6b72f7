//! Scenario configuration: physical constants, noise levels, array sizes,
//! trial counts and seeds, with a flat `key = value` text format.
//!
//! Every key has a documented default matching the reference scenario (four
//! vehicles entering at x = 100..70 m on a road 20 m from the RSU, 30 GHz
//! carrier, 20 ms slots); an empty config file reproduces it exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::ProcessNoise;
use crate::signal::{ArrayConfig, NoiseConfig};

/// Full description of one benchmark scenario.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ScenarioConfig {
    /// Number of vehicles (K).
    pub n_vehicles: usize,
    /// Initial x positions, meters; length must equal `n_vehicles`.
    pub initial_x: Vec<f64>,
    /// Road offset from the array axis, meters.
    pub road_y: f64,
    /// Initial speeds are drawn uniformly from [speed_min, speed_max] m/s.
    pub speed_min: f64,
    pub speed_max: f64,
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Propagation speed, m/s.
    pub wave_speed: f64,
    /// Slot duration T, seconds.
    pub slot_s: f64,
    /// Number of tracked time steps N.
    pub n_steps: usize,
    /// RSU transmit antennas.
    pub n_tx: usize,
    /// RSU receive antennas.
    pub n_rx: usize,
    /// Vehicle-side antennas.
    pub m_vehicle: usize,
    /// Radar cross-section, complex.
    pub rcs_re: f64,
    pub rcs_im: f64,
    /// Delay noise std, seconds.
    pub sigma_tau: f64,
    /// Doppler noise std, Hz.
    pub sigma_gamma: f64,
    /// Echo noise total complex variance (before matched-filter gain).
    pub sigma_y2: f64,
    /// Communication noise PSD.
    pub n0: f64,
    /// Angle process noise std, degrees (internal math uses radians).
    pub sigma_theta_deg: f64,
    /// Range process noise std, meters.
    pub sigma_d: f64,
    /// Speed process noise std, m/s.
    pub sigma_v: f64,
    /// Reflection-coefficient process noise std (total complex).
    pub sigma_beta: f64,
    /// Matched-filter SNR gain G.
    pub mf_gain: f64,
    /// Echo-noise inflation factor for the feedback baseline.
    pub inflation: f64,
    /// When true the feedback baseline also loses the delay/Doppler radar
    /// observations (they become uninformative).
    pub feedback_drop_radar: bool,
    /// Transmit power per vehicle and step.
    pub power: f64,
    /// Monte Carlo trials.
    pub trials: usize,
    /// Master seed; trial k uses an independent stream derived from it.
    pub seed: u64,
    /// Perfect-alignment downlink SNR, dB.
    pub nominal_snr_db: f64,
    /// Loopy refinement sweeps per tracking step.
    pub loopy_iters: usize,
    /// Initial belief variances are this multiple of the process-noise
    /// variances.
    pub prior_inflation: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_vehicles: 4,
            initial_x: vec![100.0, 90.0, 80.0, 70.0],
            road_y: 20.0,
            speed_min: 10.0,
            speed_max: 20.0,
            carrier_hz: 30e9,
            wave_speed: 3e8,
            slot_s: 0.02,
            n_steps: 20,
            n_tx: 64,
            n_rx: 64,
            m_vehicle: 16,
            rcs_re: 10.0,
            rcs_im: 10.0,
            sigma_tau: 0.67e-6,
            sigma_gamma: 2000.0,
            sigma_y2: 1.0,
            n0: 1.0,
            sigma_theta_deg: 0.02,
            sigma_d: 0.2,
            sigma_v: 0.5,
            sigma_beta: 1.0,
            mf_gain: 64.0,
            inflation: 64.0,
            feedback_drop_radar: false,
            power: 1.0,
            trials: 1000,
            seed: 1,
            nominal_snr_db: 10.0,
            loopy_iters: 5,
            prior_inflation: 10.0,
        }
    }
}

impl ScenarioConfig {
    pub fn array(&self) -> ArrayConfig {
        ArrayConfig {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            m_vehicle: self.m_vehicle,
            carrier_hz: self.carrier_hz,
            wave_speed: self.wave_speed,
        }
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            sigma_tau: self.sigma_tau,
            sigma_gamma: self.sigma_gamma,
            sigma_y2: self.sigma_y2,
            n0: self.n0,
            mf_gain: self.mf_gain,
        }
    }

    pub fn process_noise(&self) -> ProcessNoise {
        ProcessNoise {
            sigma_theta: self.sigma_theta_deg.to_radians(),
            sigma_d: self.sigma_d,
            sigma_v: self.sigma_v,
            sigma_beta: self.sigma_beta,
        }
    }

    /// Parse a flat `key = value` configuration text. Unknown keys are
    /// rejected; missing keys keep their defaults. `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut explicit_x = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    line,
                    format!("line {}: expected `key = value`", lineno + 1),
                ));
            };
            let key = key.trim();
            let value = value.trim();
            cfg.set_key(key, value)?;
            if key == "initial_x" {
                explicit_x = true;
            }
        }
        if !explicit_x && cfg.n_vehicles != cfg.initial_x.len() {
            // Spread defaults: first vehicle at 100 m, 10 m spacing.
            cfg.initial_x = (0..cfg.n_vehicles).map(|k| 100.0 - 10.0 * k as f64).collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and parse a configuration file.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::config(key, format!("cannot parse `{value}` as a number")))
        }
        fn count(key: &str, value: &str) -> Result<usize> {
            let v: i64 = value
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{value}` as an integer")))?;
            if v < 0 {
                return Err(Error::config(key, format!("must be nonnegative, got {v}")));
            }
            Ok(v as usize)
        }
        match key {
            "n_vehicles" => self.n_vehicles = count(key, value)?,
            "initial_x" => {
                self.initial_x = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<Vec<_>>>()?;
            }
            "road_y" => self.road_y = num(key, value)?,
            "speed_min" => self.speed_min = num(key, value)?,
            "speed_max" => self.speed_max = num(key, value)?,
            "carrier_hz" => self.carrier_hz = num(key, value)?,
            "wave_speed" => self.wave_speed = num(key, value)?,
            "slot_s" => self.slot_s = num(key, value)?,
            "n_steps" => self.n_steps = count(key, value)?,
            "n_tx" => self.n_tx = count(key, value)?,
            "n_rx" => self.n_rx = count(key, value)?,
            "m_vehicle" => self.m_vehicle = count(key, value)?,
            "rcs" => {
                let (re, im) = parse_complex(value)
                    .ok_or_else(|| Error::config(key, format!("cannot parse `{value}` as a complex number like 10+10j")))?;
                self.rcs_re = re;
                self.rcs_im = im;
            }
            "rcs_re" => self.rcs_re = num(key, value)?,
            "rcs_im" => self.rcs_im = num(key, value)?,
            "sigma_tau" => self.sigma_tau = num(key, value)?,
            "sigma_gamma" => self.sigma_gamma = num(key, value)?,
            "sigma_y2" => self.sigma_y2 = num(key, value)?,
            "n0" => self.n0 = num(key, value)?,
            "sigma_theta_deg" => self.sigma_theta_deg = num(key, value)?,
            "sigma_d" => self.sigma_d = num(key, value)?,
            "sigma_v" => self.sigma_v = num(key, value)?,
            "sigma_beta" => self.sigma_beta = num(key, value)?,
            "mf_gain" => self.mf_gain = num(key, value)?,
            "inflation" => self.inflation = num(key, value)?,
            "feedback_drop_radar" => {
                self.feedback_drop_radar = value.parse().map_err(|_| {
                    Error::config(key, format!("cannot parse `{value}` as true/false"))
                })?;
            }
            "power" => self.power = num(key, value)?,
            "trials" => self.trials = count(key, value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::config(key, format!("cannot parse `{value}` as u64")))?;
            }
            "nominal_snr_db" => self.nominal_snr_db = num(key, value)?,
            "loopy_iters" => self.loopy_iters = count(key, value)?,
            "prior_inflation" => self.prior_inflation = num(key, value)?,
            _ => {
                return Err(Error::config(key, "unknown key"));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_vehicles < 1 {
            return Err(Error::config("n_vehicles", "must be >= 1"));
        }
        if self.initial_x.len() != self.n_vehicles {
            return Err(Error::config(
                "initial_x",
                format!(
                    "has {} entries but n_vehicles = {}",
                    self.initial_x.len(),
                    self.n_vehicles
                ),
            ));
        }
        if !(self.road_y > 0.0) {
            return Err(Error::config("road_y", "must be positive"));
        }
        if !(self.speed_min <= self.speed_max) {
            return Err(Error::config("speed_min", "must not exceed speed_max"));
        }
        if !(self.slot_s > 0.0) {
            return Err(Error::config("slot_s", "must be positive"));
        }
        if self.n_steps < 1 {
            return Err(Error::config("n_steps", "must be >= 1"));
        }
        if self.trials < 1 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.loopy_iters < 1 {
            return Err(Error::config("loopy_iters", "must be >= 1"));
        }
        if !(self.inflation >= 1.0) {
            return Err(Error::config("inflation", "must be >= 1"));
        }
        if !(self.prior_inflation > 0.0) {
            return Err(Error::config("prior_inflation", "must be positive"));
        }
        for (key, v) in [
            ("sigma_tau", self.sigma_tau),
            ("sigma_gamma", self.sigma_gamma),
            ("sigma_y2", self.sigma_y2),
            ("sigma_theta_deg", self.sigma_theta_deg),
            ("sigma_d", self.sigma_d),
            ("sigma_v", self.sigma_v),
            ("sigma_beta", self.sigma_beta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(key, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.n0 > 0.0) {
            return Err(Error::config("n0", "must be positive"));
        }
        if !(self.power > 0.0) {
            return Err(Error::config("power", "must be positive"));
        }
        if !(self.mf_gain >= 1.0) {
            return Err(Error::config("mf_gain", "must be >= 1"));
        }
        self.array()
            .validate()
            .map_err(|e| Error::config("n_tx/n_rx/m_vehicle/carrier_hz/wave_speed", e.to_string()))?;
        Ok(())
    }
}

/// Parse `a+bj` / `a-bj` / plain real forms.
fn parse_complex(s: &str) -> Option<(f64, f64)> {
    let t = s.trim().replace(' ', "");
    if let Some(stripped) = t.strip_suffix('j').or_else(|| t.strip_suffix('i')) {
        // Find the sign separating real and imaginary parts (skip index 0).
        for (idx, ch) in stripped.char_indices().skip(1) {
            if (ch == '+' || ch == '-') && !matches!(&stripped[idx - 1..idx], "e" | "E") {
                let re: f64 = stripped[..idx].parse().ok()?;
                let im_str = &stripped[idx..];
                let im: f64 = if im_str == "+" {
                    1.0
                } else if im_str == "-" {
                    -1.0
                } else {
                    im_str.parse().ok()?
                };
                return Some((re, im));
            }
        }
        // Pure imaginary.
        let im: f64 = stripped.parse().ok()?;
        return Some((0.0, im));
    }
    t.parse::<f64>().ok().map(|re| (re, 0.0))
}
