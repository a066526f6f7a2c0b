//! UCT Monte Carlo tree search with random rollouts.
//!
//! Each node stores wins from the perspective of the player who made the move
//! leading into it, so a parent picks the child maximizing
//! `w/n + c * sqrt(ln N / n)` directly. Rollouts score win 1, tie 0.5, loss 0.
//!
//! For Kuhn Poker and Liar's Dice the hidden card or die is resampled at the
//! root once per simulation (determinization). Legal actions in both games
//! are public, so all determinizations share one tree over action sequences.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{Action, GameState, PlayerId};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MctsConfig {
    pub max_simulations: u32,
    pub rollout_count: u32,
    pub exploration_c: f64,
    pub rng_seed: u64,
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self {
            max_simulations: 1000,
            rollout_count: 1,
            exploration_c: 2.0,
            rng_seed: 0,
        }
    }
}

impl MctsConfig {
    pub fn with_simulations(max_simulations: u32) -> Self {
        Self {
            max_simulations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_simulations == 0 || self.rollout_count == 0 {
            return Err(Error::InvalidParameter(
                "max_simulations and rollout_count must be at least 1".into(),
            ));
        }
        if !(self.exploration_c >= 0.0 && self.exploration_c.is_finite()) {
            return Err(Error::InvalidParameter("exploration_c must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Upper Confidence Bound for Trees. Unvisited nodes score `+inf`.
pub fn uct_score(wins: f64, visits: u32, parent_visits: u32, c: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    let n = visits as f64;
    wins / n + c * ((parent_visits.max(1) as f64).ln() / n).sqrt()
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    /// Move leading into this node; `None` at the root.
    pub action: Option<Action>,
    /// Player credited by `wins`: the mover into this node, or the root player.
    pub owner: PlayerId,
    pub wins: f64,
    pub visits: u32,
    pub children: Vec<usize>,
    untried: Vec<Action>,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
}

impl SearchTree {
    pub fn root(&self) -> &SearchNode {
        &self.nodes[0]
    }

    /// Most-visited root child; ties go to the earliest in canonical order.
    pub fn best_action(&self) -> Option<Action> {
        let mut best: Option<&SearchNode> = None;
        for &i in &self.root().children {
            let child = &self.nodes[i];
            if best.is_none_or(|b| child.visits > b.visits) {
                best = Some(child);
            }
        }
        best.and_then(|n| n.action)
    }
}

fn rollout<R: Rng + ?Sized>(mut state: GameState, rng: &mut R, buf: &mut Vec<Action>) -> GameState {
    loop {
        state.legal_actions_into(buf);
        let Some(&a) = buf.choose(rng) else {
            return state;
        };
        state.apply_mut(a).expect("rollout picked an illegal action");
    }
}

/// Runs `max_simulations` select/expand/rollout/backpropagate iterations.
pub fn search(state: &GameState, config: &MctsConfig) -> Result<SearchTree> {
    config.validate()?;
    if state.is_terminal() {
        return Err(Error::TerminalState);
    }
    let root_player = state.to_move();
    let hidden = state.game().has_hidden_information();
    let mut rng = seed::rng(config.rng_seed);
    let mut nodes = vec![SearchNode {
        action: None,
        owner: root_player,
        wins: 0.0,
        visits: 0,
        children: Vec::new(),
        untried: state.legal_actions(),
    }];
    let mut buf = Vec::with_capacity(64);
    let mut path = Vec::with_capacity(64);

    for _ in 0..config.max_simulations {
        let mut s = if hidden {
            state.determinize(root_player, &mut rng)
        } else {
            *state
        };
        let mut node = 0usize;
        path.clear();
        path.push(0);

        // selection
        while !s.is_terminal() && nodes[node].untried.is_empty() {
            let parent_visits = nodes[node].visits;
            let mut best = usize::MAX;
            let mut best_score = f64::NEG_INFINITY;
            for &ch in &nodes[node].children {
                let score = uct_score(nodes[ch].wins, nodes[ch].visits, parent_visits, config.exploration_c);
                if score > best_score {
                    best_score = score;
                    best = ch;
                }
            }
            s.apply_mut(nodes[best].action.expect("child without action"))?;
            node = best;
            path.push(node);
        }

        // expansion
        if !s.is_terminal() {
            let action = nodes[node].untried.remove(0);
            let owner = s.to_move();
            s.apply_mut(action)?;
            let idx = nodes.len();
            nodes.push(SearchNode {
                action: Some(action),
                owner,
                wins: 0.0,
                visits: 0,
                children: Vec::new(),
                untried: s.legal_actions(),
            });
            nodes[node].children.push(idx);
            node = idx;
            path.push(node);
        }

        // simulation
        let mut credit = [0.0f64; 2];
        for _ in 0..config.rollout_count {
            let end = rollout(s, &mut rng, &mut buf);
            let outcome = end.terminal_outcome().expect("rollout ended early");
            for p in PlayerId::BOTH {
                credit[p.index()] += outcome.result_for(p).score();
            }
        }

        // backpropagation
        for &i in &path {
            let n = &mut nodes[i];
            n.visits += config.rollout_count;
            n.wins += credit[n.owner.index()];
        }
    }
    Ok(SearchTree { nodes })
}

/// Chooses the most-visited root move after a full search.
pub fn mcts_act(state: &GameState, config: &MctsConfig) -> Result<Action> {
    if state.is_terminal() {
        return Err(Error::TerminalState);
    }
    let legal = state.legal_actions();
    if legal.len() == 1 {
        return Ok(legal[0]);
    }
    let tree = search(state, config)?;
    Ok(tree.best_action().unwrap_or(legal[0]))
}
