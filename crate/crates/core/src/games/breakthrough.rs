use super::{Action, Outcome, PlayerId, Rules, Square};

/// Breakthrough on a `columns x rows` board (default 3 x 8).
///
/// P1 (`b`) starts on ranks 1-2 and moves up; P2 (`w`) starts on the top two
/// ranks and moves down. Pieces step one rank forward, straight onto an empty
/// square or diagonally onto an empty or enemy square (capturing). Reaching
/// the far rank or capturing every enemy piece wins; a player with no legal
/// move loses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Breakthrough {
    pub(crate) columns: u8,
    pub(crate) rows: u8,
    /// Row-major from rank 1; 0 empty, 1 = P1, 2 = P2.
    pub(crate) cells: [u8; 64],
    pub(crate) to_move: PlayerId,
    pub(crate) outcome: Option<Outcome>,
}

impl Breakthrough {
    pub fn new(columns: u8, rows: u8) -> Self {
        let mut cells = [0u8; 64];
        let (w, h) = (columns as usize, rows as usize);
        for c in 0..w {
            cells[c] = 1;
            cells[w + c] = 1;
            cells[(h - 2) * w + c] = 2;
            cells[(h - 1) * w + c] = 2;
        }
        Self {
            columns,
            rows,
            cells,
            to_move: PlayerId::P1,
            outcome: None,
        }
    }

    pub fn columns(&self) -> usize {
        self.columns as usize
    }

    pub fn rows(&self) -> usize {
        self.rows as usize
    }

    pub fn at(&self, col: usize, row: usize) -> u8 {
        self.cells[row * self.columns as usize + col]
    }

    pub(crate) fn direction(p: PlayerId) -> i32 {
        match p {
            PlayerId::P1 => 1,
            PlayerId::P2 => -1,
        }
    }

    pub(crate) fn goal_row(&self, p: PlayerId) -> usize {
        match p {
            PlayerId::P1 => self.rows as usize - 1,
            PlayerId::P2 => 0,
        }
    }

    pub(crate) fn has_moves(&self, p: PlayerId) -> bool {
        let (w, h) = (self.columns as i32, self.rows as i32);
        let me = p.index() as u8 + 1;
        let dir = Self::direction(p);
        (0..h).any(|row| {
            let r2 = row + dir;
            (0..h).contains(&r2)
                && (0..w).any(|col| {
                    self.cells[(row * w + col) as usize] == me
                        && [-1, 0, 1].iter().any(|&dc| {
                            let c2 = col + dc;
                            if !(0..w).contains(&c2) {
                                return false;
                            }
                            let target = self.cells[(r2 * w + c2) as usize];
                            if dc == 0 {
                                target == 0
                            } else {
                                target != me
                            }
                        })
                })
        })
    }

    /// Moves of `p` in canonical order, ignoring whose turn it is.
    pub(crate) fn moves_for(&self, p: PlayerId, out: &mut Vec<Action>) {
        let (w, h) = (self.columns as i32, self.rows as i32);
        let me = p.index() as u8 + 1;
        let dir = Self::direction(p);
        for row in 0..h {
            for col in 0..w {
                if self.cells[(row * w + col) as usize] != me {
                    continue;
                }
                let r2 = row + dir;
                if !(0..h).contains(&r2) {
                    continue;
                }
                for dc in [-1, 0, 1] {
                    let c2 = col + dc;
                    if !(0..w).contains(&c2) {
                        continue;
                    }
                    let target = self.cells[(r2 * w + c2) as usize];
                    let ok = if dc == 0 { target == 0 } else { target != me };
                    if ok {
                        out.push(Action::Step {
                            from: Square { col: col as u8, row: row as u8 },
                            to: Square { col: c2 as u8, row: r2 as u8 },
                        });
                    }
                }
            }
        }
    }
}

impl Rules for Breakthrough {

    fn to_move(&self) -> PlayerId {
        self.to_move
    }

    fn legal_actions_into(&self, out: &mut Vec<Action>) {
        self.moves_for(self.to_move, out);
    }

    fn apply(&mut self, action: Action) -> Result<(), String> {
        let Action::Step { from, to } = action else {
            return Err("Breakthrough moves are written like a2b3".into());
        };
        let (w, h) = (self.columns as usize, self.rows as usize);
        if from.col as usize >= w || to.col as usize >= w || from.row as usize >= h || to.row as usize >= h {
            return Err("square outside the board".into());
        }
        let me = self.to_move.index() as u8 + 1;
        let fi = from.row as usize * w + from.col as usize;
        let ti = to.row as usize * w + to.col as usize;
        if self.cells[fi] != me {
            return Err("source square does not hold one of the mover's pieces".into());
        }
        if to.row as i32 - from.row as i32 != Self::direction(self.to_move) {
            return Err("pieces move exactly one rank forward".into());
        }
        let dc = to.col as i32 - from.col as i32;
        match dc {
            0 if self.cells[ti] != 0 => return Err("straight moves need an empty square".into()),
            -1 | 1 if self.cells[ti] == me => return Err("cannot capture your own piece".into()),
            -1..=1 => {}
            _ => return Err("pieces move straight or one column diagonally".into()),
        }
        self.cells[ti] = me;
        self.cells[fi] = 0;
        let mover = self.to_move;
        let opp = mover.opponent();
        self.to_move = opp;
        let opp_mark = opp.index() as u8 + 1;
        self.outcome = if to.row as usize == self.goal_row(mover) || !self.cells[..w * h].contains(&opp_mark) {
            Some(Outcome::Winner(mover))
        } else {
            (!self.has_moves(opp)).then_some(Outcome::Winner(mover))
        };
        Ok(())
    }

    fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    /// Ranks from 1 upward separated by `/`, then the side to move.
    fn observation(&self, _viewer: PlayerId) -> String {
        let (w, h) = (self.columns as usize, self.rows as usize);
        let mut s = String::with_capacity(w * h + h + 4);
        for row in 0..h {
            if row > 0 {
                s.push('/');
            }
            for col in 0..w {
                s.push(match self.cells[row * w + col] {
                    1 => 'b',
                    2 => 'w',
                    _ => '.',
                });
            }
        }
        s.push(':');
        s.push_str(if self.to_move == PlayerId::P1 { "b" } else { "w" });
        s
    }
}
