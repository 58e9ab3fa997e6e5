//! Plumbing shared by the tree search and the Monte Carlo baseline: budgets,
//! the seed distribution solvers sample from, and best-path bookkeeping.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ContractError;
use crate::reward::{path_return, RewardParams};
use crate::seed::{Seed, SeedSequence};
use crate::sim::{replay, SeedActionSimulator, TrajectoryRecord};

/// When a solver stops starting new episodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Iterations(u64),
    /// Total simulator `step` calls. The episode that crosses the budget is
    /// finished, so the overshoot is under one episode.
    Steps(u64),
    Seconds(f64),
}

impl Budget {
    pub fn is_empty(&self) -> bool {
        match *self {
            Budget::Iterations(n) | Budget::Steps(n) => n == 0,
            Budget::Seconds(s) => !(s > 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Budget::Seconds(s) if !s.is_finite() || s < 0.0 => {
                Err(format!("budget seconds must be finite and non-negative, got {s}"))
            }
            _ => Ok(()),
        }
    }
}

/// Tracks consumption of a [`Budget`].
#[derive(Debug)]
pub(crate) struct BudgetMeter {
    budget: Budget,
    started: Instant,
}

impl BudgetMeter {
    pub(crate) fn new(budget: Budget) -> Self {
        BudgetMeter {
            budget,
            started: Instant::now(),
        }
    }

    pub(crate) fn exhausted(&self, episodes: u64, steps: u64) -> bool {
        match self.budget {
            Budget::Iterations(n) => episodes >= n,
            Budget::Steps(n) => steps >= n,
            Budget::Seconds(s) => self.started.elapsed() >= Duration::from_secs_f64(s.max(0.0)),
        }
    }
}

/// The distribution solvers draw seeds from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSpace {
    /// Uniform over all 64-bit seeds.
    #[default]
    Full,
    /// Uniform over a finite alphabet. Makes exhaustive enumeration feasible,
    /// which is how search results are checked against brute force.
    Alphabet(Vec<Seed>),
}

impl SeedSpace {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            SeedSpace::Alphabet(a) if a.is_empty() => Err("seed alphabet is empty".into()),
            SeedSpace::Alphabet(a) => {
                let distinct: HashSet<_> = a.iter().collect();
                if distinct.len() != a.len() {
                    Err("seed alphabet has repeated symbols".into())
                } else {
                    Ok(())
                }
            }
            SeedSpace::Full => Ok(()),
        }
    }

    /// Number of distinct seeds, `None` when unbounded for practical purposes.
    pub fn size(&self) -> Option<usize> {
        match self {
            SeedSpace::Full => None,
            SeedSpace::Alphabet(a) => Some(a.len()),
        }
    }

    pub fn sample(&self, rng: &mut SolverRng) -> Seed {
        match self {
            SeedSpace::Full => Seed(rng.0.random()),
            SeedSpace::Alphabet(a) => a[rng.0.random_range(0..a.len())],
        }
    }
}

/// A solver's own generator, seeded from the solver configuration and never
/// shared with the simulator.
#[derive(Clone, Debug)]
pub struct SolverRng(ChaCha8Rng);

impl SolverRng {
    pub fn new(seed: u64) -> Self {
        SolverRng(ChaCha8Rng::seed_from_u64(seed))
    }
}

/// A path found by a solver and its replayed trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    /// Seeds up to (not including) the step taken from the terminal state.
    pub seeds: SeedSequence,
    pub return_value: f64,
    pub event_reached: bool,
    pub trajectory: TrajectoryRecord,
}

/// Return-ordered paths with distinct seed sequences, best first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BestPathList {
    pub capacity: usize,
    pub paths: Vec<PathResult>,
}

impl BestPathList {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn best(&self) -> Option<&PathResult> {
        self.paths.first()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PathResult> {
        self.paths.iter()
    }
}

/// A finished episode, before replay.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub seeds: SeedSequence,
    pub return_value: f64,
    pub event_reached: bool,
}

/// Bounded top-k of candidates with exact-sequence deduplication. Ties keep
/// the earlier entry ahead.
#[derive(Clone, Debug)]
pub struct TopK {
    capacity: usize,
    entries: Vec<Candidate>,
}

impl TopK {
    pub fn new(capacity: usize) -> Self {
        TopK {
            capacity,
            entries: Vec::with_capacity(capacity + 1),
        }
    }

    pub fn best_return(&self) -> Option<f64> {
        self.entries.first().map(|c| c.return_value)
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    /// Offers a candidate; returns true if it was kept.
    pub fn offer(&mut self, c: Candidate) -> bool {
        if self.capacity == 0 {
            return false;
        }
        if let Some(last) = self.entries.last() {
            if self.entries.len() == self.capacity && c.return_value <= last.return_value {
                return false;
            }
        }
        if self.entries.iter().any(|e| e.seeds == c.seeds) {
            return false;
        }
        let pos = self
            .entries
            .iter()
            .position(|e| c.return_value > e.return_value)
            .unwrap_or(self.entries.len());
        self.entries.insert(pos, c);
        self.entries.truncate(self.capacity);
        true
    }

    /// Replays every kept candidate into a [`BestPathList`].
    pub fn into_paths<S: SeedActionSimulator + ?Sized>(
        self,
        sim: &mut S,
        params: &RewardParams,
    ) -> Result<BestPathList, ContractError> {
        let mut paths = Vec::with_capacity(self.entries.len());
        for c in self.entries {
            let trajectory = replay(sim, &c.seeds, params)?;
            paths.push(PathResult {
                seeds: c.seeds,
                return_value: c.return_value,
                event_reached: c.event_reached,
                trajectory,
            });
        }
        Ok(BestPathList {
            capacity: self.capacity,
            paths,
        })
    }
}

/// What a solver run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub paths: BestPathList,
    pub episodes: u64,
    /// Simulator `step` calls made by the search itself (not by the final
    /// replays).
    pub steps: u64,
}

impl SearchResult {
    pub fn best_return(&self) -> Option<f64> {
        self.paths.best().map(|p| p.return_value)
    }

    pub fn found_event(&self) -> bool {
        self.paths.best().is_some_and(|p| p.event_reached)
    }
}

/// How an episode ended: the seeds applied before the terminal step and the
/// event flag reported by that step.
#[derive(Clone, Debug, Default)]
pub(crate) struct EpisodeEnd {
    pub seeds: SeedSequence,
    pub event: bool,
}

/// Uniform-seed rollout from the simulator's current state to termination.
/// `seeds` holds the path so far and is extended in place; returns the
/// accumulated reward from here on.
pub(crate) fn rollout<S: SeedActionSimulator + ?Sized>(
    sim: &mut S,
    seeds: &mut Vec<Seed>,
    params: &RewardParams,
    space: &SeedSpace,
    rng: &mut SolverRng,
    steps: &mut u64,
    end: &mut EpisodeEnd,
) -> Result<f64, ContractError> {
    let mut rewards = Vec::with_capacity(sim.max_steps().saturating_sub(seeds.len()));
    loop {
        let seed = space.sample(rng);
        let tau = sim.is_terminal();
        let out = sim.step(seed)?;
        *steps += 1;
        rewards.push(sim.reward(&out, tau, params));
        if tau {
            end.seeds = SeedSequence(seeds.clone());
            end.event = out.event;
            return Ok(path_return(&rewards));
        }
        seeds.push(seed);
    }
}
