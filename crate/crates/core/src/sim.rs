//! The seed-action simulator contract and deterministic replay.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::ContractError;
use crate::reward::{ast_reward, path_return, RewardParams};
use crate::seed::{Seed, SeedSequence};

/// What a simulator reports for one step: the density of the disturbance it
/// drew, whether the current state is an event, and how close the current
/// state is to the event set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub likelihood: f64,
    pub event: bool,
    /// `None` when the simulator has no miss metric; the reward then falls
    /// back to [`RewardParams::miss_distance_fallback`].
    pub miss_distance: Option<f64>,
}

/// A stateful black-box simulator driven only by one pseudorandom seed per
/// step.
///
/// Implementations must be deterministic: after [`initialize`], the same seed
/// sequence produces the same outputs and terminal flags, bit for bit.
/// `step` evaluates the likelihood of the drawn disturbance together with the
/// event flag and miss distance of the state *before* the transition, then
/// transitions in place. Stepping a terminal state returns its outputs and
/// leaves the state unchanged.
///
/// [`initialize`]: SeedActionSimulator::initialize
pub trait SeedActionSimulator: Send {
    /// Resets to the deterministic initial state.
    fn initialize(&mut self);

    fn step(&mut self, seed: Seed) -> Result<StepOutput, ContractError>;

    /// True when the current state is an event or the horizon is reached.
    fn is_terminal(&self) -> bool;

    /// Upper bound on `step` calls in one episode, counting the final call
    /// made from the terminal state.
    fn max_steps(&self) -> usize;

    /// Reward for the step that just produced `out`.
    ///
    /// The default is the single-simulator reward. Composite simulators that
    /// carry more per-step information than a [`StepOutput`] override this.
    fn reward(&self, out: &StepOutput, terminal_before_step: bool, params: &RewardParams) -> f64 {
        ast_reward(out, terminal_before_step, params)
    }

    /// Extra per-step log fields for the step that was just taken.
    fn step_details(&self) -> Option<Value> {
        None
    }
}

impl<S: SeedActionSimulator + ?Sized> SeedActionSimulator for Box<S> {
    fn initialize(&mut self) {
        (**self).initialize()
    }
    fn step(&mut self, seed: Seed) -> Result<StepOutput, ContractError> {
        (**self).step(seed)
    }
    fn is_terminal(&self) -> bool {
        (**self).is_terminal()
    }
    fn max_steps(&self) -> usize {
        (**self).max_steps()
    }
    fn reward(&self, out: &StepOutput, terminal_before_step: bool, params: &RewardParams) -> f64 {
        (**self).reward(out, terminal_before_step, params)
    }
    fn step_details(&self) -> Option<Value> {
        (**self).step_details()
    }
}

/// Counts `initialize` and `step` calls on a wrapped simulator.
#[derive(Clone, Debug)]
pub struct StepCounter<S> {
    inner: S,
    steps: u64,
    initializations: u64,
}

impl<S> StepCounter<S> {
    pub fn new(inner: S) -> Self {
        StepCounter {
            inner,
            steps: 0,
            initializations: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn initializations(&self) -> u64 {
        self.initializations
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: SeedActionSimulator> SeedActionSimulator for StepCounter<S> {
    fn initialize(&mut self) {
        self.initializations += 1;
        self.inner.initialize()
    }
    fn step(&mut self, seed: Seed) -> Result<StepOutput, ContractError> {
        self.steps += 1;
        self.inner.step(seed)
    }
    fn is_terminal(&self) -> bool {
        self.inner.is_terminal()
    }
    fn max_steps(&self) -> usize {
        self.inner.max_steps()
    }
    fn reward(&self, out: &StepOutput, terminal_before_step: bool, params: &RewardParams) -> f64 {
        self.inner.reward(out, terminal_before_step, params)
    }
    fn step_details(&self) -> Option<Value> {
        self.inner.step_details()
    }
}

/// Seed used for the final step of a replay whose seed list stops at the
/// terminal state. That step only reads the terminal state's event flag and
/// miss distance, so its seed does not affect the return.
pub const TERMINAL_STEP_SEED: Seed = Seed(0);

/// A replayed episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seeds: SeedSequence,
    pub step_outputs: Vec<StepOutput>,
    /// Terminal flag observed before each step.
    pub terminal_flags: Vec<bool>,
    pub rewards: Vec<f64>,
    pub details: Vec<Option<Value>>,
    pub return_value: f64,
    pub event_reached: bool,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.step_outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step_outputs.is_empty()
    }

    /// True when the record ends with the step taken from a terminal state.
    pub fn is_complete(&self) -> bool {
        self.terminal_flags.last().copied().unwrap_or(false)
    }

    /// Sum of log likelihoods over the non-terminal steps.
    pub fn log_likelihood(&self) -> f64 {
        self.step_outputs
            .iter()
            .zip(&self.terminal_flags)
            .filter(|(_, &tau)| !tau)
            .map(|(o, _)| o.likelihood.ln())
            .sum()
    }

    /// JSON Lines view: one object per step, then a summary object.
    pub fn to_json_lines(&self) -> Vec<Value> {
        let mut lines = Vec::with_capacity(self.len() + 1);
        for t in 0..self.len() {
            let o = &self.step_outputs[t];
            let mut obj = Map::new();
            obj.insert("t".into(), json!(t));
            obj.insert("seed".into(), json!(self.seeds.0[t].0));
            obj.insert("likelihood".into(), json!(o.likelihood));
            obj.insert("event".into(), json!(o.event));
            obj.insert("miss_distance".into(), json!(o.miss_distance));
            obj.insert("terminal_before_step".into(), json!(self.terminal_flags[t]));
            obj.insert("reward".into(), json!(self.rewards[t]));
            if let Some(Value::Object(extra)) = &self.details[t] {
                for (k, v) in extra {
                    obj.insert(k.clone(), v.clone());
                }
            }
            lines.push(Value::Object(obj));
        }
        lines.push(json!({
            "return": self.return_value,
            "return_bits": format!("{:016x}", self.return_value.to_bits()),
            "event_reached": self.event_reached,
        }));
        lines
    }
}

/// Re-runs a seed sequence from the initial state.
///
/// Mirrors the search's ordering: the terminal flag is read before each step
/// and the replay stops after the step taken from a terminal state. When the
/// seeds run out at a terminal state (as search results do), one more step
/// with [`TERMINAL_STEP_SEED`] collects the terminal reward. An empty sequence
/// on a non-terminal initial state yields an empty record with return 0.
pub fn replay<S: SeedActionSimulator + ?Sized>(
    sim: &mut S,
    seeds: &SeedSequence,
    params: &RewardParams,
) -> Result<TrajectoryRecord, ContractError> {
    sim.initialize();
    let mut rec = TrajectoryRecord {
        seeds: SeedSequence::new(),
        step_outputs: Vec::new(),
        terminal_flags: Vec::new(),
        rewards: Vec::new(),
        details: Vec::new(),
        return_value: 0.0,
        event_reached: false,
    };
    let mut completed = false;
    for &seed in seeds {
        if record_step(sim, seed, params, &mut rec)? {
            completed = true;
            break;
        }
    }
    if !completed && sim.is_terminal() {
        record_step(sim, TERMINAL_STEP_SEED, params, &mut rec)?;
    }
    rec.return_value = path_return(&rec.rewards);
    Ok(rec)
}

fn record_step<S: SeedActionSimulator + ?Sized>(
    sim: &mut S,
    seed: Seed,
    params: &RewardParams,
    rec: &mut TrajectoryRecord,
) -> Result<bool, ContractError> {
    let tau = sim.is_terminal();
    let out = sim.step(seed)?;
    rec.rewards.push(sim.reward(&out, tau, params));
    rec.details.push(sim.step_details());
    rec.seeds.push(seed);
    rec.step_outputs.push(out);
    rec.terminal_flags.push(tau);
    if tau {
        rec.event_reached = out.event;
    }
    Ok(tau)
}
