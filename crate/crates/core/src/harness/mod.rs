//! Batched experiments: configuration, worker dispatch, summaries and trace
//! files.
//!
//! An experiment is read from TOML:
//!
//! ```toml
//! searches = 100
//! seed = 7
//! top_k = 10
//! budget = { iterations = 2000 }
//!
//! [simulation]
//! kind = "walker"
//! threshold = 15.0
//! horizon = 20
//!
//! [solver]
//! kind = "mcts"
//! exploration_constant = 1.0
//! k = 1.0
//! alpha = 0.5
//!
//! [reward]
//! event_reward = 100.0
//! ```
//!
//! A `[baseline]` table, shaped like `[simulation]`, turns the experiment
//! into a differential one.

mod run;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::mcts::SearchConfig;
use crate::montecarlo::McConfig;
use crate::reward::RewardParams;
use crate::seed::derive;
use crate::sim::SeedActionSimulator;
use crate::sims::encounter::{EncounterConfig, EncounterSim};
use crate::sims::walker::{Walker, WalkerConfig};
use crate::solver::{Budget, SeedSpace};

pub use run::{
    compare_budgets, run_dast, run_experiment, write_compare_csv, CompareRow, RunOptions,
    RunSummary, SearchRecord,
};
pub use trace::{read_trace, replay_trace, ReplayReport, Trace, TraceHeader};

/// Which built-in simulator to build, with its configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimSpec {
    Walker(WalkerConfig),
    Encounter(EncounterConfig),
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SimSpec::Walker(c) => c.validate(),
            SimSpec::Encounter(c) => c.validate(),
        }
        .map_err(config_err)
    }

    /// Builds a fresh simulator. `init_seed` picks the encounter geometry and
    /// is ignored by the walker.
    pub fn build(&self, init_seed: u64) -> Result<Box<dyn SeedActionSimulator>> {
        Ok(match self {
            SimSpec::Walker(c) => Box::new(Walker::new(*c).map_err(config_err)?),
            SimSpec::Encounter(c) => Box::new(EncounterSim::new(*c, init_seed).map_err(config_err)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SimSpec::Walker(_) => "walker",
            SimSpec::Encounter(_) => "encounter",
        }
    }
}

/// Tree-search parameters read from a config file. Missing fields take the
/// library defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MctsParams {
    pub k: f64,
    pub alpha: f64,
    pub exploration_constant: f64,
    pub seed_space: SeedSpace,
}

impl Default for MctsParams {
    fn default() -> Self {
        let d = SearchConfig::default();
        MctsParams {
            k: d.k,
            alpha: d.alpha,
            exploration_constant: d.exploration_constant,
            seed_space: d.seed_space,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverSpec {
    Mcts(MctsParams),
    MonteCarlo {
        #[serde(default)]
        seed_space: SeedSpace,
    },
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Mcts(MctsParams::default())
    }
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Mcts(_) => "mcts",
            SolverSpec::MonteCarlo { .. } => "monte_carlo",
        }
    }

    pub(crate) fn mcts_config(p: &MctsParams, budget: Budget, top_k: usize, rng_seed: u64) -> SearchConfig {
        SearchConfig {
            budget,
            k: p.k,
            alpha: p.alpha,
            exploration_constant: p.exploration_constant,
            top_k,
            rng_seed,
            seed_space: p.seed_space.clone(),
        }
    }

    fn validate(&self, budget: Budget, top_k: usize) -> Result<()> {
        match self {
            SolverSpec::Mcts(p) => Self::mcts_config(p, budget, top_k, 0).validate(),
            SolverSpec::MonteCarlo { seed_space } => McConfig {
                budget,
                top_k,
                rng_seed: 0,
                seed_space: seed_space.clone(),
            }
            .validate(),
        }
        .map_err(config_err)
    }
}

fn default_top_k() -> usize {
    10
}

/// Everything needed to rerun an experiment exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub simulation: SimSpec,
    /// Present for differential experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<SimSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub reward: RewardParams,
    pub searches: usize,
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.searches == 0 {
            return Err(config_err("searches must be at least 1"));
        }
        self.simulation.validate()?;
        if let Some(b) = &self.baseline {
            b.validate()?;
            if std::mem::discriminant(b) != std::mem::discriminant(&self.simulation) {
                return Err(config_err(format!(
                    "baseline simulator ({}) must be the same kind as the test simulator ({})",
                    b.name(),
                    self.simulation.name()
                )));
            }
        }
        self.reward.validate().map_err(config_err)?;
        self.solver.validate(self.budget, self.top_k)
    }

    /// Solver seed and simulator initialization seed for search `index`.
    pub fn search_seeds(&self, index: usize) -> (u64, u64) {
        let s = derive(self.seed, index as u64);
        (derive(s, 0), derive(s, 1))
    }
}
