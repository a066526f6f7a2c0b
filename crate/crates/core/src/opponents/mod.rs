//! Agents that can sit at a game table: uniform random, UCT search at a
//! chosen simulation budget, an exact minimax player for the solvable games,
//! and softmax policies.

pub mod mcts;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::solver::Solver;
use crate::games::{Action, GameKind, GameState};
use crate::policy::Policy;
use crate::seed;
pub use mcts::{mcts_act, search, uct_score, MctsConfig, SearchNode, SearchTree};

/// Simulation budgets of the opponent ladder.
pub const LADDER_SIMULATIONS: [u32; 6] = [5, 10, 100, 200, 500, 1000];

/// Uniform over `state.legal_actions()` under a generator seeded by `seed`.
pub fn random_act(state: &GameState, seed: u64) -> Result<Action> {
    let actions = state.legal_actions();
    actions
        .choose(&mut seed::rng(seed))
        .copied()
        .ok_or(Error::TerminalState)
}

/// Policies already in memory, looked up before `policy:` paths are read
/// from disk.
pub type PolicyPool = BTreeMap<PathBuf, Arc<Policy>>;

/// Textual agent description: `random`, `self`, `minimax`, `mcts:<n>`,
/// `policy:<checkpoint-path>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentSpec {
    Random,
    /// The policy being trained.
    SelfPlay,
    Minimax,
    Mcts(u32),
    Policy(PathBuf),
}

impl AgentSpec {
    /// `random`, `self` and `mcts:<n>` for every ladder budget.
    pub fn ladder() -> Vec<AgentSpec> {
        let mut out = vec![AgentSpec::Random, AgentSpec::SelfPlay];
        out.extend(LADDER_SIMULATIONS.iter().map(|&n| AgentSpec::Mcts(n)));
        out
    }

    pub fn uses_policy(&self) -> bool {
        matches!(self, AgentSpec::SelfPlay | AgentSpec::Policy(_))
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::Random => f.write_str("random"),
            AgentSpec::SelfPlay => f.write_str("self"),
            AgentSpec::Minimax => f.write_str("minimax"),
            AgentSpec::Mcts(n) => write!(f, "mcts:{n}"),
            AgentSpec::Policy(p) => write!(f, "policy:{}", p.display()),
        }
    }
}

impl FromStr for AgentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadAgentSpec(s.to_string());
        match s.trim() {
            "random" => Ok(AgentSpec::Random),
            "self" => Ok(AgentSpec::SelfPlay),
            "minimax" => Ok(AgentSpec::Minimax),
            t => {
                if let Some(n) = t.strip_prefix("mcts:") {
                    let n: u32 = n.parse().map_err(|_| bad())?;
                    if n == 0 {
                        return Err(bad());
                    }
                    Ok(AgentSpec::Mcts(n))
                } else if let Some(p) = t.strip_prefix("policy:") {
                    if p.is_empty() {
                        return Err(bad());
                    }
                    Ok(AgentSpec::Policy(PathBuf::from(p)))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl Serialize for AgentSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A ready-to-play agent.
#[derive(Debug, Clone)]
pub enum Agent {
    Random,
    Mcts(MctsConfig),
    Minimax(Arc<Solver>),
    Policy { policy: Arc<Policy>, temperature: f64 },
}

impl Agent {
    /// Builds the agent for `spec` on `game`. `current` is the policy that
    /// `self` refers to; `policy:` specs come from `pool` or from disk.
    pub fn resolve(
        spec: &AgentSpec,
        game: GameKind,
        current: Option<&Arc<Policy>>,
        pool: &PolicyPool,
        temperature: f64,
        mcts: &MctsConfig,
    ) -> Result<Agent> {
        Ok(match spec {
            AgentSpec::Random => Agent::Random,
            AgentSpec::Mcts(n) => {
                let config = MctsConfig {
                    max_simulations: *n,
                    ..*mcts
                };
                config.validate()?;
                Agent::Mcts(config)
            }
            AgentSpec::Minimax => Agent::Minimax(Arc::new(Solver::new(game)?)),
            AgentSpec::SelfPlay => Agent::Policy {
                policy: current
                    .cloned()
                    .ok_or_else(|| Error::BadAgentSpec("`self` needs a current policy".into()))?,
                temperature,
            },
            AgentSpec::Policy(path) => Agent::Policy {
                policy: match pool.get(path) {
                    Some(p) => p.clone(),
                    None => Arc::new(Policy::load(path)?),
                },
                temperature,
            },
        })
    }

    /// Chooses an action; all randomness comes from `seed`.
    pub fn act(&self, state: &GameState, seed: u64) -> Result<Action> {
        match self {
            Agent::Random => random_act(state, seed),
            Agent::Mcts(config) => mcts_act(
                state,
                &MctsConfig {
                    rng_seed: seed::combine(config.rng_seed, seed),
                    ..*config
                },
            ),
            Agent::Minimax(solver) => solver.best_action(state),
            Agent::Policy { policy, temperature } => policy.sample_action(state, *temperature, seed),
        }
    }
}
