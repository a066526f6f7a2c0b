//! Per-move regret of an agent under exact minimax values.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::games::{Action, GameKind, GameState};
use crate::opponents::AgentSpec;
use crate::parallel::Execution;
use crate::policy::Policy;

use super::{check_episodes, EvalSettings, Solver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub game: GameKind,
    pub agent: String,
    pub opponent: String,
    pub episodes: u64,
    /// Moves made by the evaluated agent.
    pub moves: u64,
    pub mean_regret: f64,
}

/// Plays `agent` against `opponent` and averages `(V*(s) - Q*(s, a)) / 2`
/// over the agent's own moves. Only Tic-Tac-Toe and Nim are supported.
pub fn regret(
    agent: &AgentSpec,
    current: Option<&Arc<Policy>>,
    opponent: &AgentSpec,
    game: GameKind,
    settings: &EvalSettings,
    exec: Execution,
) -> Result<RegretReport> {
    let solver = Solver::new(game)?;
    check_episodes(settings.episodes)?;
    let trajectories = settings
        .matchup(agent, opponent, current)
        .collect(&[game], settings.episodes, settings.master_seed, exec)?;
    let per_episode = exec.map_slice(&trajectories, |t| -> Result<(f64, u64)> {
        let seat = t.agent1_seat();
        let mut state = GameState::new(t.game, t.seeds.chance, &t.options);
        let (mut sum, mut n) = (0.0, 0);
        for step in &t.steps {
            let action = Action::parse(t.game, &step.action)?;
            if step.actor == seat {
                sum += solver.regret(&state, action)?;
                n += 1;
            }
            state.apply_mut(action)?;
        }
        Ok((sum, n))
    });
    let (mut sum, mut moves) = (0.0, 0);
    for r in per_episode {
        let (s, n) = r?;
        sum += s;
        moves += n;
    }
    Ok(RegretReport {
        game,
        agent: agent.to_string(),
        opponent: opponent.to_string(),
        episodes: settings.episodes,
        moves,
        mean_regret: if moves == 0 { 0.0 } else { sum / moves as f64 },
    })
}
