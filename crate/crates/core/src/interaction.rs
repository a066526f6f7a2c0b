//! Running episodes between two agents and storing the trajectories.
//!
//! Seats alternate every episode: in even-numbered episodes agent 1 moves
//! first. Each episode draws its chance and sampling seeds from
//! `(master_seed, game, episode)`, so episodes can run in any order or in
//! parallel and the sorted store is always the same.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{Action, GameKind, GameOptions, GameState, Outcome, PlayerId, StepKey};
use crate::opponents::{Agent, AgentSpec, MctsConfig, PolicyPool};
use crate::parallel::Execution;
use crate::policy::Policy;
use crate::seed::{self, EpisodeSeeds};

/// Plies after which an episode is stopped and scored as a tie.
pub const MOVE_LIMIT: u32 = 200;
pub const INTERACT_TEMPERATURE: f64 = 0.7;
pub const EVAL_TEMPERATURE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub key: StepKey,
    pub actor: PlayerId,
    /// Canonical move notation.
    pub action: String,
    pub move_index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub game: GameKind,
    #[serde(default, skip_serializing_if = "is_default_options")]
    pub options: GameOptions,
    pub episode: u64,
    pub seeds: EpisodeSeeds,
    /// Agent labels indexed by seat (P1, P2).
    pub agents: [String; 2],
    /// Seats played by the policy under training.
    pub learner: [bool; 2],
    pub first_player_agent: String,
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    /// Stopped at [`MOVE_LIMIT`] rather than by the rules.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

fn is_default_options(o: &GameOptions) -> bool {
    *o == GameOptions::default()
}

impl Trajectory {
    pub fn actions(&self) -> Result<Vec<Action>> {
        self.steps.iter().map(|s| Action::parse(self.game, &s.action)).collect()
    }

    /// Replays the recorded moves, checking every key, actor and index, and
    /// returns the final state.
    pub fn replay(&self) -> Result<GameState> {
        let corrupt = |msg: String| Error::CorruptTrajectory(format!("{} episode {}: {msg}", self.game, self.episode));
        let mut state = GameState::new(self.game, self.seeds.chance, &self.options);
        for (i, step) in self.steps.iter().enumerate() {
            let action = Action::parse(self.game, &step.action).map_err(|e| corrupt(e.to_string()))?;
            if step.move_index as usize != i {
                return Err(corrupt(format!("step {i} has move_index {}", step.move_index)));
            }
            if step.actor != state.to_move() {
                return Err(corrupt(format!("step {i} acted out of turn")));
            }
            if state.canonical_key(action) != step.key {
                return Err(corrupt(format!("step {i} key does not match the replayed state")));
            }
            state.apply_mut(action).map_err(|e| corrupt(e.to_string()))?;
        }
        match state.terminal_outcome() {
            Some(o) if o == self.outcome && !self.truncated => Ok(state),
            None if self.truncated && self.outcome == Outcome::Tie => Ok(state),
            _ => Err(corrupt("recorded outcome does not match the replay".into())),
        }
    }

    /// Index of the seat played by agent 1.
    pub fn agent1_seat(&self) -> PlayerId {
        seat_of_agent1(self.episode)
    }
}

/// Agent 1 takes P1 in even episodes and P2 in odd ones.
pub fn seat_of_agent1(episode: u64) -> PlayerId {
    if episode.is_multiple_of(2) {
        PlayerId::P1
    } else {
        PlayerId::P2
    }
}

/// Plays one episode. Agents are given in agent order; `seat_of_agent1`
/// decides who moves first.
pub fn run_episode(
    agents: [&Agent; 2],
    labels: [&str; 2],
    learner: [bool; 2],
    game: GameKind,
    options: &GameOptions,
    episode: u64,
    seeds: EpisodeSeeds,
) -> Result<Trajectory> {
    let first = seat_of_agent1(episode);
    // seat index -> agent index
    let agent_at = |p: PlayerId| if p == first { 0 } else { 1 };
    let mut state = GameState::new(game, seeds.chance, options);
    let mut steps = Vec::new();
    let mut truncated = false;
    while !state.is_terminal() {
        if state.move_count() >= MOVE_LIMIT {
            truncated = true;
            break;
        }
        let actor = state.to_move();
        let idx = agent_at(actor);
        let move_index = state.move_count();
        let action = agents[idx].act(&state, seed::combine(seeds.sampling, move_index as u64))?;
        if !state.is_legal(action) {
            return Err(Error::IllegalAction {
                game: game.as_str(),
                action: action.to_string(),
                reason: format!("agent `{}` chose an illegal action", labels[idx]),
            });
        }
        steps.push(Step {
            key: state.canonical_key(action),
            actor,
            action: action.to_string(),
            move_index,
        });
        state.apply_mut(action)?;
    }
    let outcome = state.terminal_outcome().unwrap_or(Outcome::Tie);
    Ok(Trajectory {
        game,
        options: *options,
        episode,
        seeds,
        agents: PlayerId::BOTH.map(|p| labels[agent_at(p)].to_string()),
        learner: PlayerId::BOTH.map(|p| learner[agent_at(p)]),
        first_player_agent: labels[agent_at(PlayerId::P1)].to_string(),
        steps,
        outcome,
        truncated,
    })
}

/// Two agent specs plus everything needed to turn them into live agents.
#[derive(Debug, Clone)]
pub struct Matchup {
    pub agent1: AgentSpec,
    pub agent2: AgentSpec,
    /// The policy `self` refers to.
    pub current: Option<Arc<Policy>>,
    /// In-memory policies for `policy:` specs.
    pub pool: PolicyPool,
    pub temperature: f64,
    pub mcts: MctsConfig,
    pub options: GameOptions,
}

impl Matchup {
    pub fn new(agent1: AgentSpec, agent2: AgentSpec, current: Option<Arc<Policy>>) -> Self {
        Self {
            agent1,
            agent2,
            current,
            pool: PolicyPool::new(),
            temperature: INTERACT_TEMPERATURE,
            mcts: MctsConfig::default(),
            options: GameOptions::default(),
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    fn resolve(&self, game: GameKind) -> Result<[Agent; 2]> {
        Ok([
            Agent::resolve(&self.agent1, game, self.current.as_ref(), &self.pool, self.temperature, &self.mcts)?,
            Agent::resolve(&self.agent2, game, self.current.as_ref(), &self.pool, self.temperature, &self.mcts)?,
        ])
    }

    /// Runs `episodes` episodes of every game, ordered by (game, episode).
    pub fn collect(&self, games: &[GameKind], episodes: u64, master_seed: u64, exec: Execution) -> Result<Vec<Trajectory>> {
        if episodes == 0 {
            return Err(Error::InvalidParameter("episode count must be at least 1".into()));
        }
        let tables = games.iter().map(|&g| self.resolve(g)).collect::<Result<Vec<_>>>()?;
        let labels = [self.agent1.to_string(), self.agent2.to_string()];
        let learner = [self.agent1 == AgentSpec::SelfPlay, self.agent2 == AgentSpec::SelfPlay];
        let per_game = episodes as usize;
        let results = exec.map_indexed(games.len() * per_game, |i| {
            let (g, episode) = (i / per_game, (i % per_game) as u64);
            let game = games[g];
            let [a, b] = &tables[g];
            run_episode(
                [a, b],
                [&labels[0], &labels[1]],
                learner,
                game,
                &self.options,
                episode,
                EpisodeSeeds::derive(master_seed, game, episode),
            )
        });
        results.into_iter().collect()
    }
}

/// Appends trajectories to a JSON-lines store, one per line.
pub fn append_jsonl(path: &Path, trajectories: &[Trajectory]) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = BufWriter::new(file);
    for t in trajectories {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Trajectory>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trajectory = serde_json::from_str(&line)
            .map_err(|e| Error::CorruptTrajectory(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(t);
    }
    Ok(out)
}
