//! A one-dimensional Gaussian random walk that fails when it crosses a
//! threshold.
//!
//! Small enough to solve by hand: the most likely crossing path under a
//! horizon of `T` steps takes `T` equal increments, which gives the search a
//! closed-form target.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ContractError;
use crate::seed::{Seed, SeedStream};
use crate::sim::{SeedActionSimulator, StepOutput};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkerConfig {
    /// Event when the position reaches or exceeds this value.
    pub threshold: f64,
    /// Number of disturbance transitions per episode.
    pub horizon: usize,
    pub step_std: f64,
    #[serde(default)]
    pub initial_position: f64,
}

impl Default for WalkerConfig {
    fn default() -> Self {
        WalkerConfig {
            threshold: 15.0,
            horizon: 20,
            step_std: 1.0,
            initial_position: 0.0,
        }
    }
}

impl WalkerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.step_std > 0.0 && self.step_std.is_finite()) {
            return Err(format!("step_std must be positive, got {}", self.step_std));
        }
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        if !self.threshold.is_finite() || !self.initial_position.is_finite() {
            return Err("threshold and initial_position must be finite".into());
        }
        Ok(())
    }
}

/// Density of `Normal(0, std^2)` at `x`.
pub fn normal_pdf(x: f64, std: f64) -> f64 {
    let z = x / std;
    (-0.5 * z * z).exp() / (std * (std::f64::consts::TAU).sqrt())
}

/// Natural log of [`normal_pdf`], computed without exponentiating.
pub fn normal_log_pdf(x: f64, std: f64) -> f64 {
    let z = x / std;
    -0.5 * z * z - std.ln() - 0.5 * std::f64::consts::TAU.ln()
}

/// The disturbance a seed stands for: one Box-Muller standard normal from the
/// seed's stream, scaled by `sigma`.
pub fn seed_to_disturbance(seed: Seed, sigma: f64) -> f64 {
    SeedStream::new(seed).standard_normal() * sigma
}

/// One walker transition: the next position and the density of the
/// disturbance that produced it.
pub fn walker_transition(position: f64, disturbance: f64, cfg: &WalkerConfig) -> (f64, f64) {
    (position + disturbance, normal_pdf(disturbance, cfg.step_std))
}

/// Distance between the threshold and the highest position reached, floored
/// at zero.
pub fn walker_miss_distance(positions: &[f64], cfg: &WalkerConfig) -> f64 {
    let top = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (cfg.threshold - top).max(0.0)
}

/// The most likely increments that cover the gap to the threshold in exactly
/// `horizon` steps, and their total log density.
///
/// The log density is concave and symmetric in the increments, so under the
/// constraint that they sum to the gap the optimum splits the gap evenly.
/// Episodes end as soon as the threshold is reached, so a shorter crossing
/// can be more likely still; see [`walker_best_event_path`].
pub fn walker_analytic_optimum(cfg: &WalkerConfig) -> Result<(Vec<f64>, f64), String> {
    cfg.validate()?;
    let gap = cfg.threshold - cfg.initial_position;
    if gap <= 0.0 {
        return Err("threshold must lie above the initial position".into());
    }
    let inc = gap / cfg.horizon as f64;
    let ll = cfg.horizon as f64 * normal_log_pdf(inc, cfg.step_std);
    Ok((vec![inc; cfg.horizon], ll))
}

/// The most likely path to the threshold when the episode stops at the first
/// crossing: the best of [`walker_analytic_optimum`] over every crossing time
/// up to the horizon. Ties go to the earlier crossing.
pub fn walker_best_event_path(cfg: &WalkerConfig) -> Result<(Vec<f64>, f64), String> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in 1..=cfg.horizon {
        let c = walker_analytic_optimum(&WalkerConfig { horizon: k, ..*cfg })?;
        if best.as_ref().is_none_or(|b| c.1 > b.1) {
            best = Some(c);
        }
    }
    best.ok_or_else(|| "horizon must be at least 1".into())
}

#[derive(Clone, Debug)]
pub struct Walker {
    cfg: WalkerConfig,
    position: f64,
    max_position: f64,
    t: usize,
    initialized: bool,
    last_position: f64,
}

impl Walker {
    pub fn new(cfg: WalkerConfig) -> Result<Self, String> {
        cfg.validate()?;
        Ok(Walker {
            cfg,
            position: cfg.initial_position,
            max_position: cfg.initial_position,
            t: 0,
            initialized: false,
            last_position: cfg.initial_position,
        })
    }

    pub fn config(&self) -> &WalkerConfig {
        &self.cfg
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    pub fn time(&self) -> usize {
        self.t
    }

    fn in_event(&self) -> bool {
        self.position >= self.cfg.threshold
    }
}

impl SeedActionSimulator for Walker {
    fn initialize(&mut self) {
        self.position = self.cfg.initial_position;
        self.max_position = self.cfg.initial_position;
        self.last_position = self.cfg.initial_position;
        self.t = 0;
        self.initialized = true;
    }

    fn step(&mut self, seed: Seed) -> Result<StepOutput, ContractError> {
        if !self.initialized {
            return Err(ContractError::NotInitialized);
        }
        let eps = seed_to_disturbance(seed, self.cfg.step_std);
        let (next, likelihood) = walker_transition(self.position, eps, &self.cfg);
        let out = StepOutput {
            likelihood,
            event: self.in_event(),
            miss_distance: Some((self.cfg.threshold - self.max_position).max(0.0)),
        };
        self.last_position = self.position;
        if !self.is_terminal() {
            self.position = next;
            self.max_position = self.max_position.max(next);
            self.t += 1;
        }
        Ok(out)
    }

    fn is_terminal(&self) -> bool {
        self.in_event() || self.t >= self.cfg.horizon
    }

    fn max_steps(&self) -> usize {
        self.cfg.horizon + 1
    }

    fn step_details(&self) -> Option<Value> {
        Some(json!({ "position": self.last_position }))
    }
}
