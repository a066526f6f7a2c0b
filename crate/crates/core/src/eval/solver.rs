//! Exact minimax for the two games small enough to solve outright.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::games::{new_game, Action, GameKind, GameResult, GameState, PlayerId};

/// Game-theoretic values of every reachable Tic-Tac-Toe or misère Nim
/// position, from the perspective of the player to move: +1 win, 0 tie, -1 loss.
#[derive(Debug, Clone)]
pub struct Solver {
    game: GameKind,
    values: HashMap<String, i8>,
}

fn result_value(r: GameResult) -> i8 {
    match r {
        GameResult::Win => 1,
        GameResult::Tie => 0,
        GameResult::Lose => -1,
    }
}

fn position_id(state: &GameState) -> String {
    state.observation(PlayerId::P1).encoding
}

impl Solver {
    pub fn new(game: GameKind) -> Result<Self> {
        if !matches!(game, GameKind::TicTacToe | GameKind::Nim) {
            return Err(Error::Unsolvable(game.as_str()));
        }
        let mut solver = Solver {
            game,
            values: HashMap::new(),
        };
        solver.solve(&new_game(game, 0));
        Ok(solver)
    }

    pub fn game(&self) -> GameKind {
        self.game
    }

    fn solve(&mut self, state: &GameState) -> i8 {
        if let Some(o) = state.terminal_outcome() {
            return result_value(o.result_for(state.to_move()));
        }
        let id = position_id(state);
        if let Some(&v) = self.values.get(&id) {
            return v;
        }
        let best = state
            .legal_actions()
            .into_iter()
            .map(|a| -self.solve(&state.apply_action(a).expect("legal")))
            .max()
            .expect("non-terminal state has moves");
        self.values.insert(id, best);
        best
    }

    fn check(&self, state: &GameState) -> Result<()> {
        if state.game() != self.game {
            return Err(Error::InvalidParameter(format!(
                "solver for {} given a {} state",
                self.game,
                state.game()
            )));
        }
        Ok(())
    }

    /// Value for the player to move (terminal: that player's result).
    pub fn value(&self, state: &GameState) -> Result<i8> {
        self.check(state)?;
        if let Some(o) = state.terminal_outcome() {
            return Ok(result_value(o.result_for(state.to_move())));
        }
        self.values
            .get(&position_id(state))
            .copied()
            .ok_or_else(|| Error::InvalidParameter("position unreachable from the initial state".into()))
    }

    /// Value of playing `action`, from the mover's perspective.
    pub fn action_value(&self, state: &GameState, action: Action) -> Result<i8> {
        let mover = state.to_move();
        let next = state.apply_action(action)?;
        match next.terminal_outcome() {
            Some(o) => Ok(result_value(o.result_for(mover))),
            None => Ok(-self.value(&next)?),
        }
    }

    pub fn optimal_actions(&self, state: &GameState) -> Result<Vec<Action>> {
        let v = self.value(state)?;
        let mut out = Vec::new();
        for a in state.legal_actions() {
            if self.action_value(state, a)? == v {
                out.push(a);
            }
        }
        Ok(out)
    }

    /// First optimal action in canonical order.
    pub fn best_action(&self, state: &GameState) -> Result<Action> {
        self.optimal_actions(state)?
            .into_iter()
            .next()
            .ok_or(Error::TerminalState)
    }

    /// Value loss of `action` scaled to [0, 1]: `(V*(s) - Q*(s, a)) / 2`.
    pub fn regret(&self, state: &GameState, action: Action) -> Result<f64> {
        Ok((self.value(state)? - self.action_value(state, action)?) as f64 / 2.0)
    }

    pub fn positions(&self) -> usize {
        self.values.len()
    }
}
