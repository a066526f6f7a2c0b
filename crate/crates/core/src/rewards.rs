//! Monte Carlo step rewards over a trajectory store, and threshold labels.
//!
//! Every (observation, action) key seen in the store accumulates the outcome
//! of the player who took it. Only steps of the policy under training are
//! counted; a trajectory with no such seat (two fixed agents, as in
//! imitation data) contributes all of its steps.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{Action, GameKind, GameOptions, GameResult, GameState, StepKey};
use crate::interaction::Trajectory;
use crate::parallel::Execution;

/// Where a key was first seen; enough to rebuild one state it stands for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepOrigin {
    pub game: GameKind,
    pub episode: u64,
    pub chance_seed: u64,
    /// Moves played before this step, in notation.
    pub history: Vec<String>,
    pub action: String,
    pub options: GameOptions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepStats {
    pub n_all: u64,
    pub n_win: u64,
    pub n_tie: u64,
    pub n_lose: u64,
    /// Net wins minus losses, bucketed by the discount exponent `T - t`.
    /// Integer buckets keep merging exact and order-independent.
    pub net_by_exponent: BTreeMap<u32, i64>,
    pub origin: StepOrigin,
}

impl StepStats {
    fn single(result: GameResult, exponent: u32, origin: StepOrigin) -> Self {
        let mut net = BTreeMap::new();
        let signed = match result {
            GameResult::Win => 1,
            GameResult::Lose => -1,
            GameResult::Tie => 0,
        };
        net.insert(exponent, signed);
        Self {
            n_all: 1,
            n_win: (result == GameResult::Win) as u64,
            n_tie: (result == GameResult::Tie) as u64,
            n_lose: (result == GameResult::Lose) as u64,
            net_by_exponent: net,
            origin,
        }
    }

    pub fn merge(&mut self, other: StepStats) {
        self.n_all += other.n_all;
        self.n_win += other.n_win;
        self.n_tie += other.n_tie;
        self.n_lose += other.n_lose;
        for (e, n) in other.net_by_exponent {
            *self.net_by_exponent.entry(e).or_insert(0) += n;
        }
        if other.origin < self.origin {
            self.origin = other.origin;
        }
    }
}

pub type StatsMap = BTreeMap<StepKey, StepStats>;

pub fn merge_stats(mut a: StatsMap, b: StatsMap) -> StatsMap {
    for (k, v) in b {
        match a.get_mut(&k) {
            Some(s) => s.merge(v),
            None => {
                a.insert(k, v);
            }
        }
    }
    a
}

fn counted_seats(t: &Trajectory) -> [bool; 2] {
    if t.learner.iter().any(|&l| l) {
        t.learner
    } else {
        [true, true]
    }
}

fn accumulate_one(t: &Trajectory, into: &mut StatsMap) -> Result<()> {
    let seats = counted_seats(t);
    let mut own_moves = [0u32; 2];
    for s in &t.steps {
        own_moves[s.actor.index()] += 1;
    }
    let mut seen = [0u32; 2];
    let mut history = Vec::with_capacity(t.steps.len());
    for (i, step) in t.steps.iter().enumerate() {
        if step.move_index as usize != i {
            return Err(Error::CorruptTrajectory(format!(
                "{} episode {}: step {i} has move_index {}",
                t.game, t.episode, step.move_index
            )));
        }
        let p = step.actor.index();
        seen[p] += 1;
        if seats[p] {
            let origin = StepOrigin {
                game: t.game,
                episode: t.episode,
                chance_seed: t.seeds.chance,
                history: history.clone(),
                action: step.action.clone(),
                options: t.options,
            };
            let stats = StepStats::single(t.outcome.result_for(step.actor), own_moves[p] - seen[p], origin);
            match into.get_mut(&step.key) {
                Some(s) => s.merge(stats),
                None => {
                    into.insert(step.key.clone(), stats);
                }
            }
        }
        history.push(step.action.clone());
    }
    Ok(())
}

/// Counts every counted step under its actor's result. Work is split into
/// chunks whose maps are merged; integer counts make the result independent
/// of the split.
pub fn accumulate_stats(trajectories: &[Trajectory], exec: Execution) -> Result<StatsMap> {
    if trajectories.is_empty() {
        return Err(Error::EmptyBatch);
    }
    const CHUNK: usize = 64;
    let chunks: Vec<&[Trajectory]> = trajectories.chunks(CHUNK).collect();
    let partial = exec.map_slice(&chunks, |chunk| {
        let mut m = StatsMap::new();
        for t in chunk.iter() {
            accumulate_one(t, &mut m)?;
        }
        Ok::<_, Error>(m)
    });
    let mut total = StatsMap::new();
    for m in partial {
        total = merge_stats(total, m?);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Estimator {
    /// `(n_win + tie_weight * n_tie) / n_all`
    WinRate {
        #[serde(default)]
        tie_weight: f64,
    },
    /// Mean of `gamma^(T - t) * R_T` over occurrences, `R_T` in {+1, 0, -1};
    /// `t` and `T` count the actor's own moves.
    Discounted {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    /// Posterior mean `(a0 + w) / (a0 + b0 + w + l)`.
    Beta {
        #[serde(default = "one")]
        alpha0: f64,
        #[serde(default = "one")]
        beta0: f64,
    },
}

fn default_gamma() -> f64 {
    0.8
}

fn one() -> f64 {
    1.0
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::WinRate { tie_weight: 0.0 }
    }
}

impl Estimator {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Estimator::WinRate { tie_weight } => (0.0..=1.0).contains(&tie_weight),
            Estimator::Discounted { gamma } => gamma > 0.0 && gamma < 1.0,
            Estimator::Beta { alpha0, beta0 } => alpha0 > 0.0 && beta0 > 0.0 && alpha0.is_finite() && beta0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid estimator parameters: {self:?}")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::WinRate { .. } => "win_rate",
            Estimator::Discounted { .. } => "discounted",
            Estimator::Beta { .. } => "beta",
        }
    }

    pub fn reward(&self, s: &StepStats) -> Result<f64> {
        if s.n_all == 0 {
            return Err(Error::InvalidParameter("step key with no occurrences".into()));
        }
        let n = s.n_all as f64;
        Ok(match *self {
            Estimator::WinRate { tie_weight } => (s.n_win as f64 + tie_weight * s.n_tie as f64) / n,
            Estimator::Discounted { gamma } => {
                s.net_by_exponent
                    .iter()
                    .map(|(&e, &net)| gamma.powi(e as i32) * net as f64)
                    .sum::<f64>()
                    / n
            }
            Estimator::Beta { alpha0, beta0 } => {
                (alpha0 + s.n_win as f64) / (alpha0 + beta0 + s.n_win as f64 + s.n_lose as f64)
            }
        })
    }
}

pub fn estimate_rewards(stats: &StatsMap, estimator: &Estimator) -> Result<BTreeMap<StepKey, f64>> {
    estimator.validate()?;
    stats
        .iter()
        .map(|(k, s)| Ok((k.clone(), estimator.reward(s)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Desirable,
    Undesirable,
}

/// Strict threshold rule: desirable iff `reward > delta`.
pub fn label_for(reward: f64, delta: f64) -> Label {
    if reward > delta {
        Label::Desirable
    } else {
        Label::Undesirable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledStep {
    pub game: GameKind,
    pub key: StepKey,
    #[serde(default, skip_serializing_if = "is_default_options")]
    pub options: GameOptions,
    pub chance_seed: u64,
    pub history: Vec<String>,
    pub action: String,
    pub reward: f64,
    pub label: Label,
    pub n_all: u64,
}

fn is_default_options(o: &GameOptions) -> bool {
    *o == GameOptions::default()
}

impl LabeledStep {
    /// One state this key stands for, rebuilt by replaying `history`.
    pub fn state(&self) -> Result<GameState> {
        let actions = self
            .history
            .iter()
            .map(|a| Action::parse(self.game, a))
            .collect::<Result<Vec<_>>>()?;
        GameState::replay(self.game, self.chance_seed, &self.options, &actions)
    }

    pub fn action(&self) -> Result<Action> {
        Action::parse(self.game, &self.action)
    }

    pub fn is_desirable(&self) -> bool {
        self.label == Label::Desirable
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    pub steps: Vec<LabeledStep>,
}

impl LabeledDataset {
    pub fn n_desirable(&self) -> usize {
        self.steps.iter().filter(|s| s.is_desirable()).count()
    }

    pub fn n_undesirable(&self) -> usize {
        self.steps.len() - self.n_desirable()
    }

    pub fn desirable_fraction(&self) -> f64 {
        if self.steps.is_empty() {
            0.0
        } else {
            self.n_desirable() as f64 / self.steps.len() as f64
        }
    }

    pub fn count_by_game(&self) -> BTreeMap<GameKind, (usize, usize)> {
        let mut m = BTreeMap::new();
        for s in &self.steps {
            let e = m.entry(s.game).or_insert((0, 0));
            if s.is_desirable() {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        m
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for s in &self.steps {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let mut steps = Vec::new();
        for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            steps.push(
                serde_json::from_str(&line)
                    .map_err(|e| Error::CorruptTrajectory(format!("{}:{}: {e}", path.display(), n + 1)))?,
            );
        }
        Ok(Self { steps })
    }
}

/// Labels each key with `reward > delta`, skipping keys seen fewer than
/// `min_count` times. Output is ordered by key, which starts with the game.
pub fn label_steps(
    rewards: &BTreeMap<StepKey, f64>,
    delta: f64,
    stats: &StatsMap,
    min_count: u64,
) -> Result<LabeledDataset> {
    let mut steps = Vec::with_capacity(rewards.len());
    for (key, &reward) in rewards {
        let s = stats
            .get(key)
            .ok_or_else(|| Error::InvalidParameter(format!("reward for unknown key {key}")))?;
        if s.n_all < min_count {
            continue;
        }
        steps.push(LabeledStep {
            game: s.origin.game,
            key: key.clone(),
            options: s.origin.options,
            chance_seed: s.origin.chance_seed,
            history: s.origin.history.clone(),
            action: s.origin.action.clone(),
            reward,
            label: label_for(reward, delta),
            n_all: s.n_all,
        });
    }
    Ok(LabeledDataset { steps })
}

/// Accumulate, estimate and label in one go.
pub fn label_store(
    trajectories: &[Trajectory],
    estimator: &Estimator,
    delta: f64,
    min_count: u64,
    exec: Execution,
) -> Result<LabeledDataset> {
    let stats = accumulate_stats(trajectories, exec)?;
    let rewards = estimate_rewards(&stats, estimator)?;
    label_steps(&rewards, delta, &stats, min_count)
}
