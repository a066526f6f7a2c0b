//! One refinement round (interact, label, train, evaluate) and the two
//! experiments built from it: the opponent sweep and iterated play against
//! earlier checkpoints.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameKind;
use crate::interaction::{Matchup, Trajectory, INTERACT_TEMPERATURE};
use crate::opponents::{AgentSpec, PolicyPool};
use crate::parallel::Execution;
use crate::policy::Policy;
use crate::refine::{bc_steps_for, train, train_spag, Method, TrainConfig, TrainOutcome};
use crate::rewards::{label_store, Estimator, LabeledDataset};
use crate::seed;

use super::{mean_win_rate, tournament, EvalSettings, MatchReport};

/// Everything a refinement round needs besides the starting policy.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub games: Vec<GameKind>,
    /// Interaction episodes per game.
    pub episodes: u64,
    pub interact_temperature: f64,
    pub master_seed: u64,
    pub estimator: Estimator,
    pub delta: f64,
    pub min_count: u64,
    pub train: TrainConfig,
    pub eval: EvalSettings,
    pub eval_opponents: Vec<AgentSpec>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            games: GameKind::ALL.to_vec(),
            episodes: 1000,
            interact_temperature: INTERACT_TEMPERATURE,
            master_seed: 0,
            estimator: Estimator::default(),
            delta: 0.5,
            min_count: 1,
            train: TrainConfig::default(),
            eval: EvalSettings::default(),
            eval_opponents: super::default_opponents(),
        }
    }
}

/// Artifacts of one round.
#[derive(Debug, Clone)]
pub struct RoundOutput {
    pub trajectories: Vec<Trajectory>,
    /// Interaction results of the learner against the opponent, per game.
    pub interaction: Vec<MatchReport>,
    pub dataset: LabeledDataset,
    pub trained: TrainOutcome,
    pub evaluation: Vec<MatchReport>,
}

/// Plays `current` (as `self`) against `opponent`, labels the learner's
/// steps, trains and evaluates the result. `pool` supplies in-memory
/// policies for `policy:` opponents.
pub fn refine_round(
    current: &Arc<Policy>,
    opponent: &AgentSpec,
    pool: &PolicyPool,
    cfg: &SweepConfig,
    interact_seed: u64,
    exec: Execution,
) -> Result<RoundOutput> {
    if cfg.games.is_empty() {
        return Err(Error::InvalidParameter("no games selected".into()));
    }
    let matchup = Matchup {
        agent1: AgentSpec::SelfPlay,
        agent2: opponent.clone(),
        current: Some(current.clone()),
        pool: pool.clone(),
        temperature: cfg.interact_temperature,
        mcts: cfg.eval.mcts,
        options: cfg.eval.options,
    };
    let trajectories = matchup.collect(&cfg.games, cfg.episodes, interact_seed, exec)?;
    let interaction = cfg
        .games
        .iter()
        .map(|&g| {
            let of_game: Vec<&Trajectory> = trajectories.iter().filter(|t| t.game == g).collect();
            MatchReport::tally(g, "self", &opponent.to_string(), interact_seed, &of_game)
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = label_store(&trajectories, &cfg.estimator, cfg.delta, cfg.min_count, exec)?;
    let trained = if cfg.train.method == Method::Spag {
        train_spag(current, &trajectories, &cfg.train, exec)?
    } else {
        let bc = bc_steps_for(&cfg.train, &trajectories);
        train(current, &dataset, bc.as_ref(), &cfg.train, exec)?
    };
    let evaluation = tournament(
        &AgentSpec::SelfPlay,
        Some(&Arc::new(trained.policy.clone())),
        &cfg.eval_opponents,
        &cfg.games,
        &cfg.eval,
        exec,
    )?;
    Ok(RoundOutput {
        trajectories,
        interaction,
        dataset,
        trained,
        evaluation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub opponent: String,
    pub interact_win_rate: f64,
    pub n_desirable: usize,
    pub n_undesirable: usize,
    pub desirable_fraction: f64,
    pub eval_win_rate: f64,
}

/// Runs a full round from `base` against every rung. All rungs share the
/// interaction seed and the evaluation seed so that only the opponent varies.
pub fn opponent_sweep(base: &Policy, ladder: &[AgentSpec], cfg: &SweepConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    if ladder.is_empty() {
        return Err(Error::InvalidParameter("empty opponent ladder".into()));
    }
    let base = Arc::new(base.clone());
    ladder
        .iter()
        .map(|rung| {
            let out = refine_round(&base, rung, &PolicyPool::new(), cfg, cfg.master_seed, exec)?;
            Ok(SweepRow {
                opponent: rung.to_string(),
                interact_win_rate: mean_win_rate(&out.interaction),
                n_desirable: out.dataset.n_desirable(),
                n_undesirable: out.dataset.n_undesirable(),
                desirable_fraction: out.dataset.desirable_fraction(),
                eval_win_rate: mean_win_rate(&out.evaluation),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub round: usize,
    pub version: u64,
    pub opponent: String,
    pub n_desirable: usize,
    pub n_undesirable: usize,
    pub eval_win_rate: f64,
}

/// File name of the checkpoint written after `round`.
pub fn round_checkpoint(round: usize) -> PathBuf {
    PathBuf::from(format!("round-{round}.ckpt"))
}

/// Round 1 is self-play; round k plays against the round k-1 checkpoint,
/// referred to as `policy:round-{k-1}.ckpt`. Round 1 uses the master seed
/// unchanged, so a single round matches the plain pipeline.
pub fn iterate(
    initial: &Policy,
    rounds: usize,
    cfg: &SweepConfig,
    exec: Execution,
) -> Result<(Vec<Policy>, Vec<IterationRow>)> {
    if rounds == 0 {
        return Err(Error::InvalidParameter("iterate needs at least one round".into()));
    }
    let mut current = Arc::new(initial.clone());
    let mut pool = PolicyPool::new();
    let mut checkpoints = Vec::with_capacity(rounds);
    let mut rows = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let (opponent, interact_seed) = if round == 1 {
            (AgentSpec::SelfPlay, cfg.master_seed)
        } else {
            (AgentSpec::Policy(round_checkpoint(round - 1)), seed::combine(cfg.master_seed, round as u64))
        };
        let out = refine_round(&current, &opponent, &pool, cfg, interact_seed, exec)?;
        let policy = out.trained.policy;
        rows.push(IterationRow {
            round,
            version: policy.version(),
            opponent: opponent.to_string(),
            n_desirable: out.dataset.n_desirable(),
            n_undesirable: out.dataset.n_undesirable(),
            eval_win_rate: mean_win_rate(&out.evaluation),
        });
        current = Arc::new(policy.clone());
        pool.insert(round_checkpoint(round), current.clone());
        checkpoints.push(policy);
    }
    Ok((checkpoints, rows))
}
