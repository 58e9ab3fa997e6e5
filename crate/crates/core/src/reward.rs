//! Reward evaluators.
//!
//! The single-simulator reward pays `R_E` when a terminal state is an event,
//! the negated miss distance when a terminal state is not, and the log
//! transition likelihood otherwise. Summed over a path, the log terms give the
//! log path likelihood, so maximizing return favours the most likely path
//! among those that reach the event.
//!
//! The differential reward combines two sub-simulators: failures of the first
//! are rewarded, failures of the second are penalized, and both contribute
//! their log likelihood while they run.

use serde::{Deserialize, Serialize};

use crate::error::ContractError;
use crate::sim::StepOutput;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardParams {
    /// Reward for a path whose terminal state is an event. Must dominate the
    /// spread of achievable log path likelihoods and miss distances so that
    /// event paths always outrank non-event paths.
    pub event_reward: f64,
    /// Miss distance used when a simulator reports none.
    #[serde(default)]
    pub miss_distance_fallback: f64,
}

impl RewardParams {
    pub fn new(event_reward: f64) -> Self {
        RewardParams {
            event_reward,
            miss_distance_fallback: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.event_reward >= 0.0 && self.event_reward.is_finite()) {
            return Err(format!(
                "event_reward must be a finite non-negative number, got {}",
                self.event_reward
            ));
        }
        if !(self.miss_distance_fallback >= 0.0 && self.miss_distance_fallback.is_finite()) {
            return Err(format!(
                "miss_distance_fallback must be a finite non-negative number, got {}",
                self.miss_distance_fallback
            ));
        }
        Ok(())
    }

    fn miss_distance(&self, out: &StepOutput) -> f64 {
        out.miss_distance.unwrap_or(self.miss_distance_fallback)
    }
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams::new(100.0)
    }
}

/// Per-step reward for one seed-action simulator. `terminal_before_step` is
/// the terminal flag observed before the step was taken.
pub fn ast_reward(out: &StepOutput, terminal_before_step: bool, params: &RewardParams) -> f64 {
    match (terminal_before_step, out.event) {
        (true, true) => params.event_reward,
        (true, false) => -params.miss_distance(out),
        (false, _) => out.likelihood.ln(),
    }
}

/// Where a sub-simulator of a differential pair stands on a given step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum SubSimStatus {
    /// Stepped from a non-terminal state.
    Running { output: StepOutput },
    /// Stepped from a terminal state for the first time; its terminal reward
    /// is paid on this step.
    JustTerminal { output: StepOutput },
    /// Already paid its terminal reward; not stepped.
    Absorbed,
}

impl SubSimStatus {
    pub fn output(&self) -> Option<&StepOutput> {
        match self {
            SubSimStatus::Running { output } | SubSimStatus::JustTerminal { output } => {
                Some(output)
            }
            SubSimStatus::Absorbed => None,
        }
    }

    pub fn is_absorbed(&self) -> bool {
        matches!(self, SubSimStatus::Absorbed)
    }
}

/// Terminal contribution of one sub-simulator, from the point of view of the
/// simulator whose failures are rewarded.
fn terminal_term(status: &SubSimStatus, params: &RewardParams) -> f64 {
    match status {
        SubSimStatus::JustTerminal { output } if output.event => params.event_reward,
        SubSimStatus::JustTerminal { output } => -params.miss_distance(output),
        _ => 0.0,
    }
}

fn log_term(status: &SubSimStatus) -> f64 {
    match status {
        SubSimStatus::Running { output } => output.likelihood.ln(),
        _ => 0.0,
    }
}

/// Differential reward for a test simulator (`test`) against a baseline.
///
/// Log likelihood terms are gated per sub-simulator: a running one
/// contributes its log term, a just-terminated one its terminal term, and an
/// absorbed one nothing. The baseline's terminal term is negated.
pub fn dast_reward(
    test: &SubSimStatus,
    baseline: &SubSimStatus,
    params: &RewardParams,
) -> Result<f64, ContractError> {
    if test.is_absorbed() && baseline.is_absorbed() {
        return Err(ContractError::BothAbsorbed);
    }
    let terminal = terminal_term(test, params) - terminal_term(baseline, params);
    Ok(terminal + (log_term(test) + log_term(baseline)))
}

/// Sum of per-step rewards along a path.
///
/// Accumulates from the last reward backwards, which is the association the
/// recursive search uses (`r_0 + (r_1 + (... + r_end))`). Replayed returns
/// therefore match search returns bit for bit.
pub fn path_return(rewards: &[f64]) -> f64 {
    match rewards.split_last() {
        None => 0.0,
        Some((&last, rest)) => rest.iter().rev().fold(last, |acc, &r| r + acc),
    }
}
