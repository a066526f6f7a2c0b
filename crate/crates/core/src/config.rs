//! Declarative experiment description, stored as TOML.
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{default_opponents, EvalSettings, SweepConfig};
use crate::games::{GameKind, GameOptions};
use crate::interaction::{EVAL_TEMPERATURE, INTERACT_TEMPERATURE};
use crate::opponents::{AgentSpec, MctsConfig};
use crate::refine::TrainConfig;
use crate::rewards::Estimator;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Master seed; every other seed is derived from it.
    pub seed: u64,
    pub games: Vec<GameKind>,
    /// Opponent of the learner during interaction.
    pub opponent: AgentSpec,
    /// Interaction episodes per game.
    pub episodes: u64,
    /// Evaluation episodes per (game, opponent).
    pub eval_episodes: u64,
    pub interact_temperature: f64,
    pub eval_temperature: f64,
    /// Reward threshold separating desirable from undesirable steps.
    pub delta: f64,
    /// Keys seen fewer times than this are left unlabeled.
    pub min_count: u64,
    pub eval_opponents: Vec<AgentSpec>,
    /// Rungs of the opponent sweep.
    pub ladder: Vec<AgentSpec>,
    /// Agents of the head-to-head matrix.
    pub head2head: Vec<AgentSpec>,
    /// Rounds of iterated play.
    pub rounds: usize,
    pub regret_opponent: AgentSpec,
    /// Root directory for run directories.
    pub out: PathBuf,
    pub options: GameOptions,
    pub mcts: MctsConfig,
    pub estimator: Estimator,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            games: GameKind::ALL.to_vec(),
            opponent: AgentSpec::SelfPlay,
            episodes: 1000,
            eval_episodes: 100,
            interact_temperature: INTERACT_TEMPERATURE,
            eval_temperature: EVAL_TEMPERATURE,
            delta: 0.5,
            min_count: 1,
            eval_opponents: default_opponents(),
            ladder: AgentSpec::ladder(),
            head2head: vec![AgentSpec::SelfPlay, AgentSpec::Random, AgentSpec::Mcts(100)],
            rounds: 3,
            regret_opponent: AgentSpec::Mcts(1000),
            out: PathBuf::from("runs"),
            options: GameOptions::default(),
            mcts: MctsConfig::default(),
            estimator: Estimator::default(),
            train: TrainConfig::default(),
        }
    }
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn check_temperature(name: &str, t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("{name} must be positive, got {t}")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.games.is_empty() {
            return Err(Error::Config("games must not be empty".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("seed must fit in a signed 64-bit integer".into()));
        }
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be at least 1".into()));
        }
        if self.eval_episodes < 2 {
            return Err(Error::Config("eval_episodes must be at least 2".into()));
        }
        check_temperature("interact_temperature", self.interact_temperature)?;
        check_temperature("eval_temperature", self.eval_temperature)?;
        if !self.delta.is_finite() {
            return Err(Error::Config("delta must be finite".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        self.options.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.mcts.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.estimator.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.train.validate()
    }

    /// SHA-256 over the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }

    /// Seed of the evaluation matches, kept apart from the interaction seed.
    pub fn eval_seed(&self) -> u64 {
        seed::combine(self.seed, 0x65_76_61_6c)
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            episodes: self.eval_episodes,
            master_seed: self.eval_seed(),
            temperature: self.eval_temperature,
            mcts: self.mcts,
            options: self.options,
            pool: Default::default(),
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            games: self.games.clone(),
            episodes: self.episodes,
            interact_temperature: self.interact_temperature,
            master_seed: self.seed,
            estimator: self.estimator,
            delta: self.delta,
            min_count: self.min_count,
            train: TrainConfig {
                seed: seed::combine(self.seed, self.train.seed),
                ..self.train
            },
            eval: self.eval_settings(),
            eval_opponents: self.eval_opponents.clone(),
        }
    }
}
