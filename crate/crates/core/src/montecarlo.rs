//! Direct Monte Carlo baseline: independent uniform-seed episodes, keeping
//! the best ones. Same budgets and result types as the tree search, so the
//! two can be compared at equal simulator-step cost.

use serde::{Deserialize, Serialize};

use crate::error::ContractError;
use crate::reward::RewardParams;
use crate::sim::SeedActionSimulator;
use crate::solver::{
    rollout, Budget, BudgetMeter, Candidate, EpisodeEnd, SearchResult, SeedSpace, SolverRng, TopK,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub budget: Budget,
    pub top_k: usize,
    pub rng_seed: u64,
    #[serde(default)]
    pub seed_space: SeedSpace,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            budget: Budget::Iterations(2000),
            top_k: 10,
            rng_seed: 0,
            seed_space: SeedSpace::Full,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.top_k == 0 {
            return Err("top_k must be at least 1".into());
        }
        self.budget.validate()?;
        self.seed_space.validate()
    }
}

pub fn mc_search<S: SeedActionSimulator + ?Sized>(
    sim: &mut S,
    params: &RewardParams,
    config: &McConfig,
) -> Result<SearchResult, ContractError> {
    let mut rng = SolverRng::new(config.rng_seed);
    let mut top = TopK::new(config.top_k);
    let meter = BudgetMeter::new(config.budget);
    let (mut episodes, mut steps) = (0u64, 0u64);
    let mut seeds = Vec::with_capacity(sim.max_steps());
    while !meter.exhausted(episodes, steps) {
        sim.initialize();
        seeds.clear();
        let mut end = EpisodeEnd::default();
        let g = rollout(
            sim,
            &mut seeds,
            params,
            &config.seed_space,
            &mut rng,
            &mut steps,
            &mut end,
        )?;
        episodes += 1;
        top.offer(Candidate {
            seeds: end.seeds,
            return_value: g,
            event_reached: end.event,
        });
    }
    Ok(SearchResult {
        paths: top.into_paths(sim, params)?,
        episodes,
        steps,
    })
}
