//! Sparse state-action features, one fixed-length block per game.
//!
//! Board games are described by the position after the move, seen from the
//! mover's side, plus a few line and threat counts. Kuhn Poker and Liar's
//! Dice use one-hot (private card or die, public history, action) tables.
//! Every feature reads only what the acting player can observe.

use crate::games::breakthrough::Breakthrough;
use crate::games::connect_four::{self, ConnectFour};
use crate::games::liars_dice::{self, LiarsDice};
use crate::games::tictactoe::{self, TicTacToe};
use crate::games::{Action, Board, GameKind, GameOptions, GameState, KuhnPoker, Nim, PlayerId};

/// (local index within the game block, value)
pub type Feature = (usize, f64);

pub const TICTACTOE_DIM: usize = 23;
pub const CONNECT_FOUR_DIM: usize = 2 * 42 + 6;
pub const KUHN_DIM: usize = 3 * 4 * 2;
pub const LIARS_DICE_DIM: usize = 6 * (liars_dice::NUM_BIDS + 1) * (liars_dice::NUM_BIDS + 1);
pub const NIM_DIM: usize = 20 + 5;

pub fn breakthrough_dim(columns: usize, rows: usize) -> usize {
    2 * columns * rows + 5
}

/// Block dimension of `game` under `options`.
pub fn dimension(game: GameKind, options: &GameOptions) -> usize {
    match game {
        GameKind::TicTacToe => TICTACTOE_DIM,
        GameKind::ConnectFour => CONNECT_FOUR_DIM,
        GameKind::Breakthrough => breakthrough_dim(
            options.breakthrough_columns as usize,
            options.breakthrough_rows as usize,
        ),
        GameKind::KuhnPoker => KUHN_DIM,
        GameKind::LiarsDice => LIARS_DICE_DIM,
        GameKind::Nim => NIM_DIM,
    }
}

/// Appends the features of playing legal `action` in non-terminal `state`.
pub(crate) fn encode(state: &GameState, action: Action, out: &mut Vec<Feature>) {
    let mover = state.to_move();
    let next = state.apply_action(action).expect("features of an illegal action");
    match (state.board(), next.board()) {
        (Board::TicTacToe(b), Board::TicTacToe(a)) => tictactoe_features(b, a, mover, action, out),
        (Board::ConnectFour(b), Board::ConnectFour(a)) => connect_four_features(b, a, mover, action, out),
        (Board::Breakthrough(b), Board::Breakthrough(a)) => breakthrough_features(b, a, mover, action, out),
        (Board::KuhnPoker(b), _) => kuhn_features(b, mover, action, out),
        (Board::LiarsDice(b), _) => liars_dice_features(b, mover, action, out),
        (Board::Nim(_), Board::Nim(a)) => nim_features(a, out),
        _ => unreachable!("successor of a different game"),
    }
}

fn push(out: &mut Vec<Feature>, index: usize, value: f64) {
    if value != 0.0 {
        out.push((index, value));
    }
}

/// Lines holding two of `mark` and one empty cell.
fn open_twos(cells: &[u8; 9], mark: u8) -> usize {
    tictactoe::LINES
        .iter()
        .filter(|line| {
            let mine = line.iter().filter(|&&i| cells[i] == mark).count();
            let empty = line.iter().filter(|&&i| cells[i] == 0).count();
            mine == 2 && empty == 1
        })
        .count()
}

fn tictactoe_features(before: &TicTacToe, after: &TicTacToe, mover: PlayerId, action: Action, out: &mut Vec<Feature>) {
    let me = TicTacToe::mark(mover);
    let them = TicTacToe::mark(mover.opponent());
    for (i, &c) in after.cells.iter().enumerate() {
        if c == me {
            push(out, i, 1.0);
        } else if c == them {
            push(out, 9 + i, 1.0);
        }
    }
    push(out, 18, (TicTacToe::winner(&after.cells) == Some(me)) as u8 as f64);
    let Action::Cell { col, row } = action else { unreachable!() };
    let idx = row as usize * 3 + col as usize;
    let mut probe = before.cells;
    probe[idx] = them;
    push(out, 19, (TicTacToe::winner(&probe) == Some(them)) as u8 as f64);
    let mine = open_twos(&after.cells, me);
    push(out, 20, mine as f64);
    push(out, 21, open_twos(&after.cells, them) as f64);
    push(out, 22, (mine >= 2) as u8 as f64);
}

/// Empty playable-or-not cells where adding one disc completes four.
fn c4_threats(discs: u64, occupied: u64) -> usize {
    let mut n = 0;
    for col in 0..connect_four::COLUMNS {
        for row in 0..connect_four::ROWS {
            let b = connect_four::bit(col, row);
            if occupied & b == 0 && connect_four::has_four(discs | b) {
                n += 1;
            }
        }
    }
    n
}

/// Columns where `player` could drop a disc and win immediately.
fn c4_immediate_wins(board: &ConnectFour, player: PlayerId) -> usize {
    (0..connect_four::COLUMNS)
        .filter(|&col| {
            let h = board.heights[col] as usize;
            h < connect_four::ROWS
                && connect_four::has_four(board.discs[player.index()] | connect_four::bit(col, h))
        })
        .count()
}

fn connect_four_features(
    before: &ConnectFour,
    after: &ConnectFour,
    mover: PlayerId,
    action: Action,
    out: &mut Vec<Feature>,
) {
    let opp = mover.opponent();
    for col in 0..connect_four::COLUMNS {
        for row in 0..connect_four::ROWS {
            let cell = row * connect_four::COLUMNS + col;
            match after.at(col, row) {
                Some(p) if p == mover => push(out, cell, 1.0),
                Some(_) => push(out, 42 + cell, 1.0),
                None => {}
            }
        }
    }
    let Action::Column(col) = action else { unreachable!() };
    let col = col as usize;
    let h = before.heights[col] as usize;
    let placed = connect_four::bit(col, h);
    push(out, 84, connect_four::has_four(after.discs[mover.index()]) as u8 as f64);
    push(out, 85, connect_four::has_four(before.discs[opp.index()] | placed) as u8 as f64);
    let gives = after.outcome.is_none() && c4_immediate_wins(after, opp) > 0;
    push(out, 86, gives as u8 as f64);
    let occupied = after.discs[0] | after.discs[1];
    push(out, 87, c4_threats(after.discs[mover.index()], occupied) as f64 / 4.0);
    push(out, 88, c4_threats(after.discs[opp.index()], occupied) as f64 / 4.0);
    push(out, 89, (col as f64 - 3.0).abs() / 3.0);
}

fn breakthrough_features(
    before: &Breakthrough,
    after: &Breakthrough,
    mover: PlayerId,
    action: Action,
    out: &mut Vec<Feature>,
) {
    let (w, h) = (after.columns(), after.rows());
    let me = mover.index() as u8 + 1;
    // rows counted from the mover's home rank
    let orient = |row: usize| if mover == PlayerId::P1 { row } else { h - 1 - row };
    for row in 0..h {
        for col in 0..w {
            let cell = orient(row) * w + col;
            match after.at(col, row) {
                0 => {}
                c if c == me => push(out, cell, 1.0),
                _ => push(out, w * h + cell, 1.0),
            }
        }
    }
    let base = 2 * w * h;
    let Action::Step { to, .. } = action else { unreachable!() };
    let (tc, tr) = (to.col as usize, to.row as usize);
    push(out, base, (before.at(tc, tr) != 0) as u8 as f64);
    push(out, base + 1, (tr == before.goal_row(mover)) as u8 as f64);
    push(out, base + 2, orient(tr) as f64 / (h - 1) as f64);
    // an opponent piece one rank ahead on a diagonal can capture the mover
    let ahead = tr as i32 + Breakthrough::direction(mover);
    let attacked = (0..h as i32).contains(&ahead)
        && [-1i32, 1].iter().any(|dc| {
            let c = tc as i32 + dc;
            (0..w as i32).contains(&c) && {
                let v = after.at(c as usize, ahead as usize);
                v != 0 && v != me
            }
        });
    push(out, base + 3, attacked as u8 as f64);
    let opp = mover.opponent();
    let opp_goal = after.goal_row(opp) as i32;
    let threat_row = opp_goal - Breakthrough::direction(opp);
    let opp_threat = after.outcome.is_none()
        && (0..w).any(|c| after.at(c, threat_row as usize) == opp.index() as u8 + 1);
    push(out, base + 4, opp_threat as u8 as f64);
}

fn kuhn_features(board: &KuhnPoker, mover: PlayerId, action: Action, out: &mut Vec<Feature>) {
    let history = match board.history_code().as_str() {
        "" => 0,
        "p" => 1,
        "b" => 2,
        _ => 3,
    };
    let a = (action == Action::Bet) as usize;
    out.push(((board.card(mover).index() * 4 + history) * 2 + a, 1.0));
}

fn liars_dice_features(board: &LiarsDice, mover: PlayerId, action: Action, out: &mut Vec<Feature>) {
    let slots = liars_dice::NUM_BIDS + 1;
    let face = board.die(mover) as usize - 1;
    let last = board.last_bid().map_or(0, |(q, f)| liars_dice::bid_index(q, f) + 1);
    let a = match action {
        Action::Bid { quantity, face } => liars_dice::bid_index(quantity, face),
        _ => liars_dice::NUM_BIDS,
    };
    out.push(((face * slots + last) * slots + a, 1.0));
}

/// Whether the player to move in `piles` loses under misère play.
pub(crate) fn misere_losing(piles: [u8; 4]) -> bool {
    if piles.iter().all(|&p| p <= 1) {
        piles.iter().filter(|&&p| p == 1).count() % 2 == 1
    } else {
        piles.iter().fold(0, |x, &p| x ^ p) == 0
    }
}

fn nim_features(after: &Nim, out: &mut Vec<Feature>) {
    let piles = after.piles();
    let mut offset = 0;
    for (i, &size) in piles.iter().enumerate() {
        let cap = crate::games::nim::INITIAL_PILES[i] as usize;
        // one-hot over sizes 0..=cap
        push(out, offset + size as usize, 1.0);
        offset += cap + 1;
    }
    debug_assert_eq!(offset, 20);
    let nonzero = piles.iter().filter(|&&p| p > 0).count();
    push(out, 20, misere_losing(piles) as u8 as f64);
    push(out, 21, (piles.iter().fold(0, |x, &p| x ^ p) == 0) as u8 as f64);
    push(out, 22, piles.iter().all(|&p| p <= 1) as u8 as f64);
    push(out, 23, (nonzero == 0) as u8 as f64);
    push(out, 24, (nonzero % 2 == 1) as u8 as f64);
}
