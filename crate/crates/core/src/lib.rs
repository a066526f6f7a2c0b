//! Self-play policy optimization for two-player adversarial games.
//!
//! The crate is organized along the play-and-learn loop:
//!
//! * [`games`]: six turn-based benchmark games behind one [`games::GameState`] type.
//! * [`opponents`]: uniform-random and UCT Monte Carlo tree search agents.
//! * [`policy`]: a linear softmax policy over per-game state-action features.
//! * [`interaction`]: seat-alternated episodes recorded as trajectories.
//! * [`rewards`]: step-level Monte Carlo reward estimation and labeling.
//! * [`refine`]: behavioral cloning, KTO, DPO and SPAG objectives plus trainers.
//! * [`eval`]: win-rate metric, tournaments, sweeps, iteration and regret.
//! * [`config`]: the declarative experiment description shared by all of the above.
//!
//! Episode-level work runs on rayon when the `parallel` feature is enabled
//! (the default) and on a plain iterator otherwise. Results are always
//! collected in episode order, so outputs do not depend on scheduling.

pub mod config;
pub mod error;
pub mod eval;
pub mod games;
pub mod interaction;
pub mod opponents;
pub mod parallel;
pub mod policy;
pub mod refine;
pub mod rewards;
pub mod seed;

pub use error::{Error, Result};
