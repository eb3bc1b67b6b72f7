//! Desk-scale testbed for predictive beamforming in vehicular networks.
//!
//! A road-side unit (RSU) with a massive MIMO uniform linear array sends
//! dual-function radar-communication signals to vehicles passing on a road,
//! and tracks each vehicle's angle, range, speed and complex reflection
//! coefficient from the radar echoes. Three trackers are provided:
//!
//! * a parametric Gaussian message-passing tracker operating on a per-step
//!   factor graph with loopy refinement of auxiliary phase variables,
//! * an extended Kalman filter on the identical motion/measurement models,
//! * a "feedback" communication-only variant realized as echo-noise inflation
//!   (one pilot instead of a full matched-filtered block).
//!
//! The [`montecarlo`] module runs seeded trials in parallel and [`report`]
//! writes plot-ready CSV/JSON outputs (angle-error CDFs, achievable rates,
//! per-step tracks).

pub mod baselines;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod kinematics;
pub mod metrics;
pub mod montecarlo;
pub mod report;
pub mod signal;
pub mod sim;
pub mod tracker;

pub use error::{Error, Result};
pub use gaussian::{ComplexGaussian, Gaussian};
