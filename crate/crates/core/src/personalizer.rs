//! Iteration-domain extremum seeker that tunes the synergy from per-reach
//! costs.
//!
//! Each iteration commands `theta_hat + a·sin(omega0·i)`, observes the cost
//! of that reach, and moves `theta_hat` against a gradient estimate:
//!
//! 1. high-pass: `xi = J - hp`, `hp += eps·xi` (seeded with the first cost);
//! 2. demodulate: `g_raw = xi·sin(omega0·i) / a`;
//! 3. FIR: the 5 most recent high-passed costs (newest first) are combined
//!    with the estimator taps `L`, then demodulated the same way;
//! 4. descend: `theta_hat -= k_eff · ((1 - blend)·g_raw + blend·g_fir)`,
//!    projected onto the bounds.
//!
//! The taps form a band-pass around the dither frequency with a small
//! phase lead, so the FIR branch is a lower-variance estimate of the same
//! gradient. `k_eff = gain · gain_scale`; see
//! [`PersonalizerConfig::with_curvature_gain`].

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_4;
use thiserror::Error;

pub const WINDOW_LEN: usize = 5;

pub const NOMINAL_OMEGA0: f64 = FRAC_PI_4;
pub const NOMINAL_DITHER_AMP: f64 = 0.06;
pub const NOMINAL_GAIN: f64 = 0.0008;
pub const NOMINAL_HP_COEFF: f64 = 0.1;
pub const NOMINAL_ESTIMATOR_GAIN: [f64; WINDOW_LEN] = [0.3840, 0.6067, -0.2273, -0.8977, -1.0302];
pub const DEFAULT_BLEND: f64 = 0.5;
pub const SYNERGY_BOUNDS: (f64, f64) = (0.8, 2.7);

/// Gain × cost-curvature product used when calibrating `k_eff`.
pub const DEFAULT_GAIN_CURVATURE_PRODUCT: f64 = 0.03;

pub const DEFAULT_STEADY_WINDOW: usize = 10;

/// Upper bound on the stored `theta_hat` history.
const HISTORY_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersonalizerError {
    #[error("invalid personaliser config: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("cost must be finite, got {0}")]
    NonFiniteCost(f64),
    #[error("cost must be non-negative, got {0}")]
    NegativeCost(f64),
    #[error("update overflowed for cost {0}; state left unchanged")]
    NonFiniteUpdate(f64),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> PersonalizerError {
    PersonalizerError::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

/// Tuning of the personaliser. Field names match the config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalizerConfig {
    /// Dither frequency, radians per iteration.
    pub omega0: f64,
    pub dither_amp: f64,
    /// Integrator gain `k`, kept verbatim; see `gain_scale`.
    pub gain: f64,
    /// High-pass coefficient `eps`.
    pub hp_coeff: f64,
    /// FIR taps `L`, newest sample first.
    pub estimator_gain: Vec<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_init: f64,
    /// Weight of the FIR branch in the gradient estimate.
    #[serde(default = "default_blend")]
    pub blend: f64,
    /// Multiplier applied to `gain`.
    #[serde(default = "default_gain_scale")]
    pub gain_scale: f64,
    /// Largest change of `theta_hat` in one iteration; `None` is unlimited.
    #[serde(default)]
    pub max_step: Option<f64>,
}

fn default_blend() -> f64 {
    DEFAULT_BLEND
}

fn default_gain_scale() -> f64 {
    1.0
}

impl PersonalizerConfig {
    /// Nominal tuning with `k_eff = k`.
    pub fn nominal(theta_init: f64) -> Self {
        Self {
            omega0: NOMINAL_OMEGA0,
            dither_amp: NOMINAL_DITHER_AMP,
            gain: NOMINAL_GAIN,
            hp_coeff: NOMINAL_HP_COEFF,
            estimator_gain: NOMINAL_ESTIMATOR_GAIN.to_vec(),
            theta_min: SYNERGY_BOUNDS.0,
            theta_max: SYNERGY_BOUNDS.1,
            theta_init,
            blend: DEFAULT_BLEND,
            gain_scale: 1.0,
            max_step: None,
        }
    }

    /// Scales the gain so that `k_eff · curvature = product`, where
    /// `curvature` is the quadratic coefficient of the expected cost map
    /// (m² per unit theta²). This makes the convergence rate independent of
    /// the cost units.
    pub fn with_curvature_gain(mut self, curvature: f64, product: f64) -> Self {
        self.gain_scale = product / (curvature * self.gain);
        self
    }

    pub fn with_max_step(mut self, max_step: Option<f64>) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn with_theta_init(mut self, theta_init: f64) -> Self {
        self.theta_init = theta_init;
        self
    }

    pub fn effective_gain(&self) -> f64 {
        self.gain * self.gain_scale
    }

    pub fn theta_bounds(&self) -> (f64, f64) {
        (self.theta_min, self.theta_max)
    }

    pub fn validate(&self) -> Result<(), PersonalizerError> {
        let finite = [
            ("omega0", self.omega0),
            ("dither_amp", self.dither_amp),
            ("gain", self.gain),
            ("hp_coeff", self.hp_coeff),
            ("theta_min", self.theta_min),
            ("theta_max", self.theta_max),
            ("theta_init", self.theta_init),
            ("blend", self.blend),
            ("gain_scale", self.gain_scale),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, format!("must be finite, got {v}")));
            }
        }
        if self.dither_amp <= 0.0 {
            return Err(invalid(
                "dither_amp",
                format!("must be > 0, got {}", self.dither_amp),
            ));
        }
        if self.gain <= 0.0 {
            return Err(invalid("gain", format!("must be > 0, got {}", self.gain)));
        }
        if self.gain_scale <= 0.0 {
            return Err(invalid(
                "gain_scale",
                format!("must be > 0, got {}", self.gain_scale),
            ));
        }
        if !(self.hp_coeff > 0.0 && self.hp_coeff < 1.0) {
            return Err(invalid(
                "hp_coeff",
                format!("must lie in (0, 1), got {}", self.hp_coeff),
            ));
        }
        if self.estimator_gain.len() != WINDOW_LEN {
            return Err(invalid(
                "estimator_gain",
                format!(
                    "must have {WINDOW_LEN} entries, got {}",
                    self.estimator_gain.len()
                ),
            ));
        }
        if self.estimator_gain.iter().any(|v| !v.is_finite()) {
            return Err(invalid("estimator_gain", "entries must be finite"));
        }
        if !(self.theta_min < self.theta_init && self.theta_init < self.theta_max) {
            return Err(invalid(
                "theta_init",
                format!(
                    "must lie strictly inside ({}, {}), got {}",
                    self.theta_min, self.theta_max, self.theta_init
                ),
            ));
        }
        if let Some(m) = self.max_step {
            if !(m > 0.0 && m.is_finite()) {
                return Err(invalid(
                    "max_step",
                    format!("must be finite and > 0, got {m}"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.blend) {
            return Err(invalid(
                "blend",
                format!("must lie in [0, 1], got {}", self.blend),
            ));
        }
        Ok(())
    }
}

/// One observed reach in the estimator window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    /// Commanded synergy.
    pub theta: f64,
    pub cost: f64,
    /// High-passed cost.
    pub filtered: f64,
}

/// What a gradient estimator sees at one iteration.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorInput<'a> {
    pub filtered_cost: f64,
    /// `sin(omega0 · iteration)` for the iteration being observed.
    pub dither: f64,
    pub dither_amp: f64,
    /// Newest entry first, including the current one.
    pub window: &'a VecDeque<WindowEntry>,
}

impl EstimatorInput<'_> {
    pub fn window_full(&self) -> bool {
        self.window.len() == WINDOW_LEN
    }
}

/// Strategy for turning observed costs into a gradient estimate.
pub trait GradientEstimator {
    fn estimate(&self, input: &EstimatorInput<'_>) -> f64;
}

/// Single-sample demodulation of the high-passed cost.
#[derive(Debug, Clone, Copy, Default)]
pub struct Demodulator;

impl GradientEstimator for Demodulator {
    fn estimate(&self, input: &EstimatorInput<'_>) -> f64 {
        input.filtered_cost * input.dither / input.dither_amp
    }
}

/// FIR band-pass over the high-passed window, demodulated by the current
/// dither. Returns zero until the window is full.
#[derive(Debug, Clone, PartialEq)]
pub struct FirEstimator {
    pub taps: Vec<f64>,
}

impl FirEstimator {
    pub fn band_pass(&self, window: &VecDeque<WindowEntry>) -> f64 {
        self.taps
            .iter()
            .zip(window.iter())
            .map(|(l, e)| l * e.filtered)
            .sum()
    }
}

impl GradientEstimator for FirEstimator {
    fn estimate(&self, input: &EstimatorInput<'_>) -> f64 {
        if !input.window_full() {
            return 0.0;
        }
        self.band_pass(input.window) * input.dither / input.dither_amp
    }
}

/// Convex blend of [`Demodulator`] and [`FirEstimator`]; the demodulator
/// carries the full weight until the window fills.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendedEstimator {
    pub blend: f64,
    pub fir: FirEstimator,
}

impl BlendedEstimator {
    pub fn from_config(config: &PersonalizerConfig) -> Self {
        Self {
            blend: config.blend,
            fir: FirEstimator {
                taps: config.estimator_gain.clone(),
            },
        }
    }
}

impl GradientEstimator for BlendedEstimator {
    fn estimate(&self, input: &EstimatorInput<'_>) -> f64 {
        let raw = Demodulator.estimate(input);
        if !input.window_full() {
            return raw;
        }
        (1.0 - self.blend) * raw + self.blend * self.fir.estimate(input)
    }
}

/// Optimiser memory. Serialises to JSON for checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalizerState {
    pub theta_hat: f64,
    pub iteration: usize,
    pub hp_state: f64,
    /// Newest first, at most [`WINDOW_LEN`] entries.
    pub cost_window: VecDeque<WindowEntry>,
    pub gradient_estimate: f64,
    pub converged: bool,
    /// `theta_hat` at the start and after every update.
    pub theta_history: Vec<f64>,
}

impl PersonalizerState {
    pub fn init(config: &PersonalizerConfig) -> Result<Self, PersonalizerError> {
        config.validate()?;
        Ok(Self {
            theta_hat: config.theta_init,
            iteration: 0,
            hp_state: 0.0,
            cost_window: VecDeque::with_capacity(WINDOW_LEN),
            gradient_estimate: 0.0,
            converged: false,
            theta_history: vec![config.theta_init],
        })
    }

    pub fn dither(&self, config: &PersonalizerConfig) -> f64 {
        (config.omega0 * self.iteration as f64).sin()
    }

    /// Synergy to command for the current iteration.
    pub fn next_theta(&self, config: &PersonalizerConfig) -> f64 {
        let theta = self.theta_hat + config.dither_amp * self.dither(config);
        theta.clamp(config.theta_min, config.theta_max)
    }

    /// Feeds the cost of the reach commanded at the current iteration.
    pub fn observe_cost(
        &mut self,
        config: &PersonalizerConfig,
        cost: f64,
    ) -> Result<(), PersonalizerError> {
        self.observe_cost_with(config, cost, &BlendedEstimator::from_config(config))
    }

    pub fn observe_cost_with<E: GradientEstimator + ?Sized>(
        &mut self,
        config: &PersonalizerConfig,
        cost: f64,
        estimator: &E,
    ) -> Result<(), PersonalizerError> {
        if !cost.is_finite() {
            return Err(PersonalizerError::NonFiniteCost(cost));
        }
        if cost < 0.0 {
            return Err(PersonalizerError::NegativeCost(cost));
        }

        let theta = self.next_theta(config);
        let dither = self.dither(config);
        let hp_prev = if self.iteration == 0 {
            cost
        } else {
            self.hp_state
        };
        let filtered = cost - hp_prev;
        let hp_state = hp_prev + config.hp_coeff * filtered;

        let mut window = self.cost_window.clone();
        window.push_front(WindowEntry {
            theta,
            cost,
            filtered,
        });
        window.truncate(WINDOW_LEN);

        let gradient = estimator.estimate(&EstimatorInput {
            filtered_cost: filtered,
            dither,
            dither_amp: config.dither_amp,
            window: &window,
        });
        let mut step = -config.effective_gain() * gradient;
        if let Some(m) = config.max_step {
            step = step.clamp(-m, m);
        }
        let theta_hat = self.theta_hat + step;
        if !(gradient.is_finite() && theta_hat.is_finite() && hp_state.is_finite()) {
            return Err(PersonalizerError::NonFiniteUpdate(cost));
        }

        self.hp_state = hp_state;
        self.cost_window = window;
        self.gradient_estimate = gradient;
        self.theta_hat = theta_hat.clamp(config.theta_min, config.theta_max);
        self.iteration += 1;
        self.theta_history.push(self.theta_hat);
        if self.theta_history.len() > HISTORY_CAP {
            let excess = self.theta_history.len() - HISTORY_CAP;
            self.theta_history.drain(..excess);
        }
        self.converged =
            self.detect_steady_state(DEFAULT_STEADY_WINDOW, default_steady_tolerance(config));
        Ok(())
    }

    /// True when `theta_hat` varied by less than `tol` over the last
    /// `window` recorded values.
    pub fn detect_steady_state(&self, window: usize, tol: f64) -> bool {
        detect_steady_state(&self.theta_history, window, tol)
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Twice the dither amplitude.
pub fn default_steady_tolerance(config: &PersonalizerConfig) -> f64 {
    2.0 * config.dither_amp
}

/// Range test over the tail of a `theta_hat` history.
pub fn detect_steady_state(history: &[f64], window: usize, tol: f64) -> bool {
    let window = window.max(2);
    if history.len() < window {
        return false;
    }
    let tail = &history[history.len() - window..];
    let max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    max - min < tol
}
