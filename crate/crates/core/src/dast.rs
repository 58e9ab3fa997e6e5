//! Differential stress testing: a test system and a baseline system run side
//! by side on the same seeds, composed into one seed-action simulator.
//!
//! Search over the composite rewards failures of the test system that the
//! baseline does not share. Each sub-simulator pays its terminal reward once,
//! on the first step taken from its terminal state, and is absorbed after
//! that: it is no longer stepped and contributes nothing.

use serde_json::{json, Value};

use crate::error::ContractError;
use crate::reward::{dast_reward, RewardParams, SubSimStatus};
use crate::seed::Seed;
use crate::sim::{SeedActionSimulator, StepOutput};

#[derive(Clone, Debug)]
struct Lane<S> {
    sim: S,
    absorbed: bool,
    terminal_event: Option<bool>,
    last_status: SubSimStatus,
    last_details: Option<Value>,
}

impl<S: SeedActionSimulator> Lane<S> {
    fn new(sim: S) -> Self {
        Lane {
            sim,
            absorbed: false,
            terminal_event: None,
            last_status: SubSimStatus::Absorbed,
            last_details: None,
        }
    }

    fn reset(&mut self) {
        self.sim.initialize();
        self.absorbed = false;
        self.terminal_event = None;
        self.last_status = SubSimStatus::Absorbed;
        self.last_details = None;
    }

    fn is_terminal(&self) -> bool {
        self.absorbed || self.sim.is_terminal()
    }

    fn step(&mut self, seed: Seed) -> Result<(), ContractError> {
        if self.absorbed {
            self.last_status = SubSimStatus::Absorbed;
            self.last_details = None;
            return Ok(());
        }
        let tau = self.sim.is_terminal();
        let output = self.sim.step(seed)?;
        self.last_details = self.sim.step_details();
        self.last_status = if tau {
            self.absorbed = true;
            self.terminal_event = Some(output.event);
            SubSimStatus::JustTerminal { output }
        } else {
            SubSimStatus::Running { output }
        };
        Ok(())
    }

    fn log_value(&self) -> Value {
        let mut v = serde_json::to_value(&self.last_status).unwrap_or(Value::Null);
        if let (Value::Object(m), Some(d)) = (&mut v, &self.last_details) {
            m.insert("details".into(), d.clone());
        }
        v
    }
}

/// Test and baseline simulators composed into one.
///
/// The combined state is terminal when both parts are. Its step output
/// carries the product of the running parts' likelihoods, the test part's
/// miss distance, and an event flag that is set only on the final step, when
/// the test system failed and the baseline did not. The reward comes from
/// [`dast_reward`] over both parts' statuses rather than from that output.
#[derive(Clone, Debug)]
pub struct CombinedSimulator<A, B> {
    test: Lane<A>,
    baseline: Lane<B>,
    test_miss: Option<f64>,
}

impl<A: SeedActionSimulator, B: SeedActionSimulator> CombinedSimulator<A, B> {
    pub fn new(test: A, baseline: B) -> Self {
        CombinedSimulator {
            test: Lane::new(test),
            baseline: Lane::new(baseline),
            test_miss: None,
        }
    }

    pub fn test(&self) -> &A {
        &self.test.sim
    }

    pub fn baseline(&self) -> &B {
        &self.baseline.sim
    }

    /// Statuses of the last combined step, test first.
    pub fn last_statuses(&self) -> (&SubSimStatus, &SubSimStatus) {
        (&self.test.last_status, &self.baseline.last_status)
    }

    pub fn test_absorbed(&self) -> bool {
        self.test.absorbed
    }

    pub fn baseline_absorbed(&self) -> bool {
        self.baseline.absorbed
    }

    /// How the test and baseline episodes ended, once both have.
    pub fn outcome(&self) -> Option<(bool, bool)> {
        self.test.terminal_event.zip(self.baseline.terminal_event)
    }

    pub fn into_parts(self) -> (A, B) {
        (self.test.sim, self.baseline.sim)
    }
}

impl<A: SeedActionSimulator, B: SeedActionSimulator> SeedActionSimulator
    for CombinedSimulator<A, B>
{
    fn initialize(&mut self) {
        self.test.reset();
        self.baseline.reset();
        self.test_miss = None;
    }

    fn step(&mut self, seed: Seed) -> Result<StepOutput, ContractError> {
        if self.test.absorbed && self.baseline.absorbed {
            return Err(ContractError::BothAbsorbed);
        }
        self.test.step(seed)?;
        self.baseline.step(seed)?;

        let likelihood = [&self.test.last_status, &self.baseline.last_status]
            .into_iter()
            .filter_map(|s| match s {
                SubSimStatus::Running { output } => Some(output.likelihood),
                _ => None,
            })
            .product();
        if let Some(out) = self.test.last_status.output() {
            self.test_miss = out.miss_distance;
        }
        let event = matches!(self.outcome(), Some((true, false)));
        Ok(StepOutput {
            likelihood,
            event,
            miss_distance: self.test_miss,
        })
    }

    fn is_terminal(&self) -> bool {
        self.test.is_terminal() && self.baseline.is_terminal()
    }

    fn max_steps(&self) -> usize {
        self.test.sim.max_steps().max(self.baseline.sim.max_steps())
    }

    fn reward(&self, _out: &StepOutput, _terminal_before_step: bool, params: &RewardParams) -> f64 {
        // Only reachable after a successful step, so at least one part moved.
        dast_reward(&self.test.last_status, &self.baseline.last_status, params)
            .expect("combined step with both parts absorbed")
    }

    fn step_details(&self) -> Option<Value> {
        Some(json!({
            "test": self.test.log_value(),
            "baseline": self.baseline.log_value(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcts::{search, SearchConfig};
    use crate::reward::path_return;
    use crate::seed::{derive, SeedSequence};
    use crate::sim::replay;
    use crate::sims::walker::{Walker, WalkerConfig};
    use crate::solver::Budget;

    fn walker(threshold: f64, horizon: usize) -> Walker {
        Walker::new(WalkerConfig {
            threshold,
            horizon,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn terminal_is_conjunction() {
        let mut c = CombinedSimulator::new(walker(15.0, 3), walker(15.0, 5));
        c.initialize();
        assert!(!c.is_terminal());
        for i in 0..3 {
            c.step(Seed(i)).unwrap();
        }
        assert!(c.test().is_terminal());
        assert!(!c.is_terminal());
        c.step(Seed(3)).unwrap();
        assert!(c.test_absorbed());
        assert!(!c.is_terminal());
        c.step(Seed(4)).unwrap();
        assert!(c.is_terminal());
        let out = c.step(Seed(5)).unwrap();
        assert!(c.test_absorbed() && c.baseline_absorbed());
        assert!(!out.event);
        assert_eq!(c.step(Seed(6)), Err(ContractError::BothAbsorbed));

        c.initialize();
        assert!(!c.test_absorbed() && !c.baseline_absorbed());
        assert!(!c.is_terminal());
    }

    #[test]
    fn uninitialized_is_a_violation() {
        let mut c = CombinedSimulator::new(walker(15.0, 3), walker(15.0, 3));
        assert_eq!(c.step(Seed(0)), Err(ContractError::NotInitialized));
    }

    #[test]
    fn identical_parts_cancel() {
        let p = RewardParams::default();
        for i in 0..200 {
            let mut c = CombinedSimulator::new(walker(3.0, 10), walker(3.0, 10));
            let seeds: SeedSequence = (0..12).map(|j| Seed(derive(i, j))).collect();
            let rec = replay(&mut c, &seeds, &p).unwrap();
            assert!(rec.is_complete());
            assert!(!rec.event_reached);
            for d in &rec.details {
                let d = d.as_ref().unwrap();
                assert_eq!(d["test"], d["baseline"]);
            }
            let last = *rec.rewards.last().unwrap();
            assert_eq!(last, 0.0);
            // the episode total is twice the single-sim log likelihood
            let mut w = walker(3.0, 10);
            let single = replay(&mut w, &seeds, &p).unwrap();
            let ll: Vec<f64> = single.rewards[..single.len() - 1].iter().map(|r| 2.0 * r).collect();
            let mut expect = ll.clone();
            expect.push(0.0);
            assert_eq!(rec.return_value, path_return(&expect));
        }
    }

    #[test]
    fn differential_event_set_at_final_step_only() {
        // one strong push crosses the low threshold but not the high one
        let mut c = CombinedSimulator::new(walker(1.0, 3), walker(50.0, 3));
        c.initialize();
        let mut seed = 0;
        loop {
            c.initialize();
            c.step(Seed(seed)).unwrap();
            if c.test().is_terminal() && c.test().time() == 1 {
                break;
            }
            seed += 1;
        }
        let p = RewardParams::default();
        let out = c.step(Seed(0)).unwrap();
        assert!(!out.event);
        assert!(c.test_absorbed());
        let r_test_terminal = c.reward(&out, false, &p);
        assert!(r_test_terminal > 90.0);
        while !c.is_terminal() {
            assert!(!c.step(Seed(1)).unwrap().event);
        }
        let out = c.step(Seed(2)).unwrap();
        assert!(out.event);
        assert_eq!(c.outcome(), Some((true, false)));
        assert!(c.reward(&out, true, &p) > 0.0);
    }

    #[test]
    fn reward_identity_over_episode() {
        let p = RewardParams::default();
        let mut c = CombinedSimulator::new(walker(2.0, 8), walker(4.0, 8));
        for i in 0..100 {
            let seeds: SeedSequence = (0..10).map(|j| Seed(derive(1000 + i, j))).collect();
            c.initialize();
            let mut rewards = Vec::new();
            for &s in seeds.iter() {
                let tau = c.is_terminal();
                c.step(s).unwrap();
                let (a, b) = c.last_statuses();
                rewards.push(dast_reward(a, b, &p).unwrap());
                if tau {
                    break;
                }
            }
            let rec = replay(&mut c, &seeds, &p).unwrap();
            assert!(rec.len() <= c.max_steps());
            assert_eq!(rec.rewards, rewards);
        }
    }

    #[test]
    fn search_finds_differential_failure() {
        let mut c = CombinedSimulator::new(walker(5.0, 8), walker(9.0, 8));
        let cfg = SearchConfig {
            budget: Budget::Iterations(1500),
            ..Default::default()
        };
        let r = search(&mut c, &RewardParams::default(), &cfg).unwrap();
        assert!(r.found_event());
        let best = r.paths.best().unwrap();
        let test_end = best
            .trajectory
            .details
            .iter()
            .flatten()
            .find(|d| d["test"]["phase"] == "just_terminal")
            .unwrap();
        assert_eq!(test_end["test"]["output"]["event"], true);
        let last = best.trajectory.details.last().unwrap().as_ref().unwrap();
        assert_eq!(last["baseline"]["phase"], "just_terminal");
        assert_eq!(last["baseline"]["output"]["event"], false);
    }
}
