//! Uniform turn-based game abstraction and the six benchmark games.
//!
//! [`GameState`] is a small `Copy` value. Applying an action returns a new
//! state; the original is never modified. Chance events (Kuhn Poker deals,
//! Liar's Dice rolls) are fixed at construction from `chance_seed`, so an
//! episode is replayed exactly from its seed and action list.
//!
//! Canonical legal-action orders:
//!
//! | game | order |
//! |------|-------|
//! | Tic-Tac-Toe | cell index, row-major from `C1R1` |
//! | Connect Four | column ascending |
//! | Breakthrough | source square row-major from `a1`, then left-diagonal, straight, right-diagonal |
//! | Nim | pile ascending, then count ascending |
//! | Kuhn Poker | `<Pass>`, `<Bet>` |
//! | Liar's Dice | bids by (quantity, face) ascending, then `<Liar>` |

pub(crate) mod breakthrough;
pub(crate) mod connect_four;
pub(crate) mod kuhn;
pub(crate) mod liars_dice;
pub(crate) mod nim;
pub(crate) mod tictactoe;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use breakthrough::Breakthrough;
pub use connect_four::ConnectFour;
pub use kuhn::{KuhnCard, KuhnPoker};
pub use liars_dice::LiarsDice;
pub use nim::Nim;
pub use tictactoe::TicTacToe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlayerId {
    P1,
    P2,
}

impl PlayerId {
    pub const BOTH: [PlayerId; 2] = [PlayerId::P1, PlayerId::P2];

    pub fn opponent(self) -> PlayerId {
        match self {
            PlayerId::P1 => PlayerId::P2,
            PlayerId::P2 => PlayerId::P1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            PlayerId::P1 => 0,
            PlayerId::P2 => 1,
        }
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlayerId::P1 => "P1",
            PlayerId::P2 => "P2",
        })
    }
}

/// One player's result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameResult {
    Win,
    Lose,
    Tie,
}

impl GameResult {
    /// Win 1, tie 0.5, loss 0.
    pub fn score(self) -> f64 {
        match self {
            GameResult::Win => 1.0,
            GameResult::Tie => 0.5,
            GameResult::Lose => 0.0,
        }
    }
}

/// Terminal outcome. Results are complementary by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Winner(PlayerId),
    Tie,
}

impl Outcome {
    pub fn result_for(self, player: PlayerId) -> GameResult {
        match self {
            Outcome::Tie => GameResult::Tie,
            Outcome::Winner(w) if w == player => GameResult::Win,
            Outcome::Winner(_) => GameResult::Lose,
        }
    }

    pub fn from_results(p1: GameResult, p2: GameResult) -> Option<Outcome> {
        match (p1, p2) {
            (GameResult::Win, GameResult::Lose) => Some(Outcome::Winner(PlayerId::P1)),
            (GameResult::Lose, GameResult::Win) => Some(Outcome::Winner(PlayerId::P2)),
            (GameResult::Tie, GameResult::Tie) => Some(Outcome::Tie),
            _ => None,
        }
    }
}

/// Serialized as `{"P1": "win", "P2": "lose"}`.
impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("P1", &self.result_for(PlayerId::P1))?;
        map.serialize_entry("P2", &self.result_for(PlayerId::P2))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Results {
            #[serde(rename = "P1")]
            p1: GameResult,
            #[serde(rename = "P2")]
            p2: GameResult,
        }
        let r = Results::deserialize(deserializer)?;
        Outcome::from_results(r.p1, r.p2)
            .ok_or_else(|| serde::de::Error::custom("outcome results are not complementary"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    #[serde(rename = "tictactoe")]
    TicTacToe,
    ConnectFour,
    Breakthrough,
    KuhnPoker,
    LiarsDice,
    Nim,
}

impl GameKind {
    pub const ALL: [GameKind; 6] = [
        GameKind::Breakthrough,
        GameKind::ConnectFour,
        GameKind::TicTacToe,
        GameKind::KuhnPoker,
        GameKind::LiarsDice,
        GameKind::Nim,
    ];

    /// The games ordered by [`GameKind::index`].
    pub const ALL_BY_INDEX: [GameKind; 6] = [
        GameKind::TicTacToe,
        GameKind::ConnectFour,
        GameKind::Breakthrough,
        GameKind::KuhnPoker,
        GameKind::LiarsDice,
        GameKind::Nim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GameKind::TicTacToe => "tictactoe",
            GameKind::ConnectFour => "connect_four",
            GameKind::Breakthrough => "breakthrough",
            GameKind::KuhnPoker => "kuhn_poker",
            GameKind::LiarsDice => "liars_dice",
            GameKind::Nim => "nim",
        }
    }

    /// Stable small integer used for seed derivation and parameter layout.
    pub fn index(self) -> usize {
        match self {
            GameKind::TicTacToe => 0,
            GameKind::ConnectFour => 1,
            GameKind::Breakthrough => 2,
            GameKind::KuhnPoker => 3,
            GameKind::LiarsDice => 4,
            GameKind::Nim => 5,
        }
    }

    /// Upper bound on plies in any legal play-out.
    pub fn move_bound(self, options: &GameOptions) -> u32 {
        match self {
            GameKind::TicTacToe => 9,
            GameKind::ConnectFour => 42,
            // Every move advances one piece by one row.
            GameKind::Breakthrough => {
                let (cols, rows) = (options.breakthrough_columns as u32, options.breakthrough_rows as u32);
                2 * (2 * cols) * (rows - 1)
            }
            GameKind::KuhnPoker => 3,
            // Twelve strictly increasing bids and one challenge.
            GameKind::LiarsDice => 13,
            GameKind::Nim => 16,
        }
    }

    pub fn has_hidden_information(self) -> bool {
        matches!(self, GameKind::KuhnPoker | GameKind::LiarsDice)
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' ', '\''], "_");
        Ok(match norm.as_str() {
            "tictactoe" | "tic_tac_toe" | "ttt" => GameKind::TicTacToe,
            "connect_four" | "connectfour" | "connect4" => GameKind::ConnectFour,
            "breakthrough" => GameKind::Breakthrough,
            "kuhn_poker" | "kuhnpoker" | "kuhn" => GameKind::KuhnPoker,
            "liars_dice" | "liar_s_dice" | "liarsdice" => GameKind::LiarsDice,
            "nim" => GameKind::Nim,
            _ => return Err(Error::UnknownGame(s.to_string())),
        })
    }
}

/// Per-game construction options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameOptions {
    pub breakthrough_columns: u8,
    pub breakthrough_rows: u8,
}

impl Default for GameOptions {
    fn default() -> Self {
        Self {
            breakthrough_columns: 3,
            breakthrough_rows: 8,
        }
    }
}

impl GameOptions {
    pub fn validate(&self) -> Result<()> {
        let (c, r) = (self.breakthrough_columns, self.breakthrough_rows);
        if !(2..=8).contains(&c) || !(5..=8).contains(&r) {
            return Err(Error::InvalidParameter(format!(
                "breakthrough board {c}x{r} outside 2..=8 columns, 5..=8 rows"
            )));
        }
        Ok(())
    }
}

/// A square on a Breakthrough board, zero-based; row 0 is rank `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square {
    pub col: u8,
    pub row: u8,
}

/// A move in any of the six games. Each game uses a disjoint set of variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    /// Tic-Tac-Toe mark, zero-based; written `C{col+1}R{row+1}`.
    Cell { col: u8, row: u8 },
    /// Connect Four drop, zero-based; written `C{col+1}`.
    Column(u8),
    /// Breakthrough piece move; written like `a2b3`.
    Step { from: Square, to: Square },
    /// Nim removal, zero-based pile; written `<pile:{pile+1}, take:{count}>`.
    Take { pile: u8, count: u8 },
    Pass,
    Bet,
    /// Liar's Dice bid; written `<{quantity} dices, {face} value>`.
    Bid { quantity: u8, face: u8 },
    /// Liar's Dice challenge; written `<Liar>`.
    Challenge,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Action::Cell { col, row } => write!(f, "C{}R{}", col + 1, row + 1),
            Action::Column(c) => write!(f, "C{}", c + 1),
            Action::Step { from, to } => write!(
                f,
                "{}{}{}{}",
                (b'a' + from.col) as char,
                from.row + 1,
                (b'a' + to.col) as char,
                to.row + 1
            ),
            Action::Take { pile, count } => write!(f, "<pile:{}, take:{}>", pile + 1, count),
            Action::Pass => f.write_str("<Pass>"),
            Action::Bet => f.write_str("<Bet>"),
            Action::Bid { quantity, face } => write!(f, "<{quantity} dices, {face} value>"),
            Action::Challenge => f.write_str("<Liar>"),
        }
    }
}

impl Action {
    /// Parses the canonical notation of `game`.
    pub fn parse(game: GameKind, text: &str) -> Result<Action> {
        let bad = || Error::BadNotation {
            game: game.as_str(),
            text: text.to_string(),
        };
        let t = text.trim();
        let num = |s: &str| s.trim().parse::<u8>().map_err(|_| bad());
        let action = match game {
            GameKind::TicTacToe => {
                let rest = t.strip_prefix('C').ok_or_else(bad)?;
                let (c, r) = rest.split_once('R').ok_or_else(bad)?;
                let (c, r) = (num(c)?, num(r)?);
                if !(1..=3).contains(&c) || !(1..=3).contains(&r) {
                    return Err(bad());
                }
                Action::Cell { col: c - 1, row: r - 1 }
            }
            GameKind::ConnectFour => {
                let c = num(t.strip_prefix('C').ok_or_else(bad)?)?;
                if !(1..=7).contains(&c) {
                    return Err(bad());
                }
                Action::Column(c - 1)
            }
            GameKind::Breakthrough => {
                let b = t.as_bytes();
                let square = |file: u8, rank: &str| -> Result<Square> {
                    if !file.is_ascii_lowercase() {
                        return Err(bad());
                    }
                    let r = num(rank)?;
                    if r == 0 {
                        return Err(bad());
                    }
                    Ok(Square { col: file - b'a', row: r - 1 })
                };
                // Second file letter splits the two squares.
                let split = (1..b.len()).find(|&i| b[i].is_ascii_lowercase()).ok_or_else(bad)?;
                if b.is_empty() || split < 2 {
                    return Err(bad());
                }
                let from = square(b[0], &t[1..split])?;
                let to = square(b[split], &t[split + 1..])?;
                Action::Step { from, to }
            }
            GameKind::Nim => {
                let inner = t.strip_prefix('<').and_then(|s| s.strip_suffix('>')).ok_or_else(bad)?;
                let (p, n) = inner.split_once(',').ok_or_else(bad)?;
                let p = num(p.trim().strip_prefix("pile:").ok_or_else(bad)?)?;
                let n = num(n.trim().strip_prefix("take:").ok_or_else(bad)?)?;
                if p == 0 {
                    return Err(bad());
                }
                Action::Take { pile: p - 1, count: n }
            }
            GameKind::KuhnPoker => match t {
                "<Pass>" => Action::Pass,
                "<Bet>" => Action::Bet,
                _ => return Err(bad()),
            },
            GameKind::LiarsDice => {
                if t == "<Liar>" {
                    Action::Challenge
                } else {
                    let inner = t.strip_prefix('<').and_then(|s| s.strip_suffix('>')).ok_or_else(bad)?;
                    let (q, f) = inner.split_once(',').ok_or_else(bad)?;
                    let q = num(q.trim().strip_suffix("dices").ok_or_else(bad)?)?;
                    let f = num(f.trim().strip_suffix("value").ok_or_else(bad)?)?;
                    Action::Bid { quantity: q, face: f }
                }
            }
        };
        Ok(action)
    }
}

/// What one player can see. For perfect-information games the encoding
/// determines the state; for Kuhn Poker and Liar's Dice it omits the
/// opponent's private card or die.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    pub viewer: PlayerId,
    pub encoding: String,
}

/// Counting identity of a (state, action) pair: game tag, the acting
/// player's observation and the action notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepKey(pub String);

impl StepKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The key with its action suffix removed: identifies the information state.
    pub fn state_part(&self) -> &str {
        self.0.rsplit_once('|').map_or(&self.0, |(s, _)| s)
    }
}

impl fmt::Display for StepKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Board {
    TicTacToe(TicTacToe),
    ConnectFour(ConnectFour),
    Breakthrough(Breakthrough),
    KuhnPoker(KuhnPoker),
    LiarsDice(LiarsDice),
    Nim(Nim),
}

/// Rules shared by all game boards.
pub(crate) trait Rules {
    fn to_move(&self) -> PlayerId;
    fn legal_actions_into(&self, out: &mut Vec<Action>);
    /// Checks legality and applies; returns the violated rule otherwise.
    fn apply(&mut self, action: Action) -> std::result::Result<(), String>;
    fn outcome(&self) -> Option<Outcome>;
    fn observation(&self, viewer: PlayerId) -> String;
    /// Resamples information hidden from `viewer`.
    fn determinize<R: Rng + ?Sized>(&self, _viewer: PlayerId, _rng: &mut R) -> Self
    where
        Self: Sized + Copy,
    {
        *self
    }
}

macro_rules! dispatch {
    ($board:expr, $b:ident => $body:expr) => {
        match $board {
            Board::TicTacToe($b) => $body,
            Board::ConnectFour($b) => $body,
            Board::Breakthrough($b) => $body,
            Board::KuhnPoker($b) => $body,
            Board::LiarsDice($b) => $body,
            Board::Nim($b) => $body,
        }
    };
}

/// Full configuration of one game in progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GameState {
    chance_seed: u64,
    move_count: u32,
    board: Board,
}

/// Initial state with default options (Breakthrough on 3 columns by 8 rows).
pub fn new_game(game: GameKind, chance_seed: u64) -> GameState {
    GameState::new(game, chance_seed, &GameOptions::default())
}

impl GameState {
    pub fn new(game: GameKind, chance_seed: u64, options: &GameOptions) -> GameState {
        let board = match game {
            GameKind::TicTacToe => Board::TicTacToe(TicTacToe::new()),
            GameKind::ConnectFour => Board::ConnectFour(ConnectFour::new()),
            GameKind::Breakthrough => Board::Breakthrough(Breakthrough::new(
                options.breakthrough_columns,
                options.breakthrough_rows,
            )),
            GameKind::KuhnPoker => Board::KuhnPoker(KuhnPoker::deal(chance_seed)),
            GameKind::LiarsDice => Board::LiarsDice(LiarsDice::roll(chance_seed)),
            GameKind::Nim => Board::Nim(Nim::new()),
        };
        GameState {
            chance_seed,
            move_count: 0,
            board,
        }
    }

    /// Replays `actions` from the initial state.
    pub fn replay(game: GameKind, chance_seed: u64, options: &GameOptions, actions: &[Action]) -> Result<GameState> {
        let mut state = GameState::new(game, chance_seed, options);
        for &a in actions {
            state.apply_mut(a)?;
        }
        Ok(state)
    }

    pub fn game(&self) -> GameKind {
        match self.board {
            Board::TicTacToe(_) => GameKind::TicTacToe,
            Board::ConnectFour(_) => GameKind::ConnectFour,
            Board::Breakthrough(_) => GameKind::Breakthrough,
            Board::KuhnPoker(_) => GameKind::KuhnPoker,
            Board::LiarsDice(_) => GameKind::LiarsDice,
            Board::Nim(_) => GameKind::Nim,
        }
    }

    pub fn chance_seed(&self) -> u64 {
        self.chance_seed
    }

    pub fn move_count(&self) -> u32 {
        self.move_count
    }

    pub fn to_move(&self) -> PlayerId {
        dispatch!(&self.board, b => b.to_move())
    }

    pub(crate) fn board(&self) -> &Board {
        &self.board
    }

    pub fn legal_actions(&self) -> Vec<Action> {
        let mut out = Vec::new();
        self.legal_actions_into(&mut out);
        out
    }

    /// Clears `out` and fills it with the legal actions in canonical order.
    pub fn legal_actions_into(&self, out: &mut Vec<Action>) {
        out.clear();
        if self.terminal_outcome().is_none() {
            dispatch!(&self.board, b => b.legal_actions_into(out));
        }
    }

    pub fn is_legal(&self, action: Action) -> bool {
        self.legal_actions().contains(&action)
    }

    pub fn apply_action(&self, action: Action) -> Result<GameState> {
        let mut next = *self;
        next.apply_mut(action)?;
        Ok(next)
    }

    pub fn apply_mut(&mut self, action: Action) -> Result<()> {
        if self.terminal_outcome().is_some() {
            return Err(self.illegal(action, "the game is over".into()));
        }
        let game = self.game().as_str();
        dispatch!(&mut self.board, b => b.apply(action)).map_err(|reason| Error::IllegalAction {
            game,
            action: action.to_string(),
            reason,
        })?;
        self.move_count += 1;
        Ok(())
    }

    fn illegal(&self, action: Action, reason: String) -> Error {
        Error::IllegalAction {
            game: self.game().as_str(),
            action: action.to_string(),
            reason,
        }
    }

    pub fn terminal_outcome(&self) -> Option<Outcome> {
        dispatch!(&self.board, b => b.outcome())
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal_outcome().is_some()
    }

    pub fn observation(&self, viewer: PlayerId) -> Observation {
        Observation {
            viewer,
            encoding: dispatch!(&self.board, b => b.observation(viewer)),
        }
    }

    /// Information-state identity of the player to move.
    pub fn state_key(&self) -> String {
        format!("{}|{}", self.game(), self.observation(self.to_move()).encoding)
    }

    /// Counting identity of `(self, action)` from the acting player's view.
    pub fn canonical_key(&self, action: Action) -> StepKey {
        StepKey(format!("{}|{}", self.state_key(), action))
    }

    /// A state consistent with `viewer`'s observation with all hidden
    /// information resampled uniformly.
    pub fn determinize<R: Rng + ?Sized>(&self, viewer: PlayerId, rng: &mut R) -> GameState {
        let board = match &self.board {
            Board::KuhnPoker(b) => Board::KuhnPoker(b.determinize(viewer, rng)),
            Board::LiarsDice(b) => Board::LiarsDice(b.determinize(viewer, rng)),
            other => *other,
        };
        GameState { board, ..*self }
    }
}
