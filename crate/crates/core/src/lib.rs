//! Adaptive stress testing over seed-action simulators.
//!
//! A simulator is driven only by one pseudorandom seed per step. Search over
//! seed sequences looks for the most likely path to a failure event: each
//! step pays the log likelihood of the disturbance drawn, and the terminal
//! step pays a large bonus for an event or the negated miss distance
//! otherwise. [`mcts::search`] does the search; [`montecarlo::mc_search`] is
//! the direct sampling baseline; [`dast::CombinedSimulator`] turns a pair of
//! systems into a single simulator whose failures are those of the test
//! system alone.
//!
//! ```
//! use seedstress::mcts::{search, SearchConfig};
//! use seedstress::reward::RewardParams;
//! use seedstress::sims::walker::{Walker, WalkerConfig};
//! use seedstress::solver::Budget;
//!
//! let mut walker = Walker::new(WalkerConfig { threshold: 5.0, horizon: 10, ..Default::default() })?;
//! let config = SearchConfig { budget: Budget::Iterations(500), ..Default::default() };
//! let result = search(&mut walker, &RewardParams::default(), &config)?;
//! assert!(result.found_event());
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod dast;
pub mod harness;
pub mod error;
pub mod mcts;
pub mod montecarlo;
pub mod reward;
pub mod seed;
pub mod sim;
pub mod sims;
pub mod solver;

pub use error::{ContractError, Error, Result};
pub use reward::RewardParams;
pub use seed::{Seed, SeedSequence};
pub use sim::{replay, SeedActionSimulator, StepOutput, TrajectoryRecord};
