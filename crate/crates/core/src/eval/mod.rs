//! Win rates, tournaments against the opponent ladder, head-to-head
//! matrices, the opponent sweep, iterated self-play and exact regret.

pub mod regret;
pub mod solver;
pub mod sweep;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{GameKind, GameOptions, GameResult};
use crate::interaction::{Matchup, Trajectory, EVAL_TEMPERATURE};
use crate::opponents::{AgentSpec, MctsConfig, PolicyPool};
use crate::parallel::Execution;
use crate::policy::Policy;

pub use regret::{regret, RegretReport};
pub use solver::Solver;
pub use sweep::{iterate, opponent_sweep, IterationRow, SweepConfig, SweepRow};

/// `(n_win + 0.5 n_tie) / (n_win + n_lose + n_tie)`
pub fn win_rate(n_win: u64, n_lose: u64, n_tie: u64) -> Result<f64> {
    let total = n_win + n_lose + n_tie;
    if total == 0 {
        return Err(Error::InvalidParameter("win rate of zero games".into()));
    }
    Ok((n_win as f64 + 0.5 * n_tie as f64) / total as f64)
}

/// Shared settings for evaluation matches.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub episodes: u64,
    pub master_seed: u64,
    pub temperature: f64,
    pub mcts: MctsConfig,
    pub options: GameOptions,
    pub pool: PolicyPool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            episodes: 100,
            master_seed: 0,
            temperature: EVAL_TEMPERATURE,
            mcts: MctsConfig::default(),
            options: GameOptions::default(),
            pool: PolicyPool::new(),
        }
    }
}

impl EvalSettings {
    fn matchup(&self, a: &AgentSpec, b: &AgentSpec, current: Option<&Arc<Policy>>) -> Matchup {
        Matchup {
            agent1: a.clone(),
            agent2: b.clone(),
            current: current.cloned(),
            pool: self.pool.clone(),
            temperature: self.temperature,
            mcts: self.mcts,
            options: self.options,
        }
    }
}

/// Outcome counts from agent 1's side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub game: GameKind,
    pub agent: String,
    pub opponent: String,
    pub episodes: u64,
    pub n_win: u64,
    pub n_lose: u64,
    pub n_tie: u64,
    pub win_rate: f64,
    pub seed: u64,
}

impl MatchReport {
    /// Tallies trajectories of one game played by the same pair of agents.
    pub fn tally(game: GameKind, agent: &str, opponent: &str, seed: u64, trajectories: &[&Trajectory]) -> Result<Self> {
        let (mut w, mut l, mut t) = (0, 0, 0);
        for tr in trajectories {
            match tr.outcome.result_for(tr.agent1_seat()) {
                GameResult::Win => w += 1,
                GameResult::Lose => l += 1,
                GameResult::Tie => t += 1,
            }
        }
        Ok(Self {
            game,
            agent: agent.to_string(),
            opponent: opponent.to_string(),
            episodes: trajectories.len() as u64,
            n_win: w,
            n_lose: l,
            n_tie: t,
            win_rate: win_rate(w, l, t)?,
            seed,
        })
    }
}

fn check_episodes(episodes: u64) -> Result<()> {
    if episodes < 2 {
        return Err(Error::InvalidParameter("evaluation needs at least 2 episodes for seat alternation".into()));
    }
    Ok(())
}

/// Plays `agent` against `opponent` on each game; one report per game.
pub fn play_match(
    agent: &AgentSpec,
    opponent: &AgentSpec,
    current: Option<&Arc<Policy>>,
    games: &[GameKind],
    settings: &EvalSettings,
    exec: Execution,
) -> Result<Vec<MatchReport>> {
    check_episodes(settings.episodes)?;
    let m = settings.matchup(agent, opponent, current);
    let trajectories = m.collect(games, settings.episodes, settings.master_seed, exec)?;
    games
        .iter()
        .map(|&g| {
            let of_game: Vec<&Trajectory> = trajectories.iter().filter(|t| t.game == g).collect();
            MatchReport::tally(g, &agent.to_string(), &opponent.to_string(), settings.master_seed, &of_game)
        })
        .collect()
}

/// The default evaluation field: random, the strongest ladder rung, and two
/// mid-ladder rungs.
pub fn default_opponents() -> Vec<AgentSpec> {
    vec![AgentSpec::Random, AgentSpec::Mcts(1000), AgentSpec::Mcts(100), AgentSpec::Mcts(500)]
}

/// One report per (game, opponent), grouped by opponent.
pub fn tournament(
    agent: &AgentSpec,
    current: Option<&Arc<Policy>>,
    opponents: &[AgentSpec],
    games: &[GameKind],
    settings: &EvalSettings,
    exec: Execution,
) -> Result<Vec<MatchReport>> {
    let mut out = Vec::new();
    for o in opponents {
        out.extend(play_match(agent, o, current, games, settings, exec)?);
    }
    Ok(out)
}

/// Mean win rate over reports.
pub fn mean_win_rate(reports: &[MatchReport]) -> f64 {
    reports.iter().map(|r| r.win_rate).sum::<f64>() / reports.len().max(1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadToHead {
    pub labels: Vec<String>,
    /// `matrix[i][j]`: mean over games of agent i's win rate against agent j.
    pub matrix: Vec<Vec<f64>>,
    pub reports: Vec<MatchReport>,
}

/// Plays every unordered pair once; the mirrored entry is `1 - M[i][j]` and
/// the diagonal is 0.5.
pub fn head_to_head(
    agents: &[AgentSpec],
    current: Option<&Arc<Policy>>,
    games: &[GameKind],
    settings: &EvalSettings,
    exec: Execution,
) -> Result<HeadToHead> {
    let n = agents.len();
    let mut matrix = vec![vec![0.5; n]; n];
    let mut reports = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let r = play_match(&agents[i], &agents[j], current, games, settings, exec)?;
            let w = mean_win_rate(&r);
            matrix[i][j] = w;
            matrix[j][i] = 1.0 - w;
            reports.extend(r);
        }
    }
    Ok(HeadToHead {
        labels: agents.iter().map(|a| a.to_string()).collect(),
        matrix,
        reports,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: game, agent, opponent, episodes, n_win, n_lose, n_tie, win_rate, seed.
pub fn write_tournament_csv(path: &Path, reports: &[MatchReport]) -> Result<()> {
    write_rows(path, reports)
}

#[derive(Serialize)]
struct H2hRow<'a> {
    agent: &'a str,
    opponent: &'a str,
    win_rate: f64,
}

/// Columns: agent, opponent, win_rate; one row per matrix cell.
pub fn write_head2head_csv(path: &Path, h: &HeadToHead) -> Result<()> {
    let mut rows = Vec::new();
    for (i, a) in h.labels.iter().enumerate() {
        for (j, b) in h.labels.iter().enumerate() {
            rows.push(H2hRow {
                agent: a,
                opponent: b,
                win_rate: h.matrix[i][j],
            });
        }
    }
    write_rows(path, &rows)
}

/// Columns: opponent, interact_win_rate, n_desirable, n_undesirable, desirable_fraction, eval_win_rate.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_rows(path, rows)
}

/// Columns: game, agent, opponent, episodes, moves, mean_regret.
pub fn write_regret_csv(path: &Path, rows: &[RegretReport]) -> Result<()> {
    write_rows(path, rows)
}

/// Columns: round, version, opponent, n_desirable, n_undesirable, eval_win_rate.
pub fn write_iterate_csv(path: &Path, rows: &[IterationRow]) -> Result<()> {
    write_rows(path, rows)
}
