use super::{Action, Outcome, PlayerId, Rules};

pub(crate) const COLUMNS: usize = 7;
pub(crate) const ROWS: usize = 6;
const STRIDE: usize = ROWS + 1;

/// Bit index of (column, row); row 0 is the bottom.
pub(crate) fn bit(col: usize, row: usize) -> u64 {
    1u64 << (col * STRIDE + row)
}

pub(crate) fn has_four(b: u64) -> bool {
    // vertical, horizontal, both diagonals
    [1, STRIDE, STRIDE - 1, STRIDE + 1].iter().any(|&s| {
        let m = b & (b >> s);
        m & (m >> (2 * s)) != 0
    })
}

/// 7 columns by 6 rows, one bitboard per player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConnectFour {
    pub(crate) discs: [u64; 2],
    pub(crate) heights: [u8; COLUMNS],
    pub(crate) to_move: PlayerId,
    pub(crate) outcome: Option<Outcome>,
}

impl Default for ConnectFour {
    fn default() -> Self {
        Self::new()
    }
}

impl ConnectFour {
    pub fn new() -> Self {
        Self {
            discs: [0; 2],
            heights: [0; COLUMNS],
            to_move: PlayerId::P1,
            outcome: None,
        }
    }

    /// Owner of (col, row), if any.
    pub fn at(&self, col: usize, row: usize) -> Option<PlayerId> {
        let b = bit(col, row);
        if self.discs[0] & b != 0 {
            Some(PlayerId::P1)
        } else if self.discs[1] & b != 0 {
            Some(PlayerId::P2)
        } else {
            None
        }
    }

    pub fn height(&self, col: usize) -> usize {
        self.heights[col] as usize
    }
}

impl Rules for ConnectFour {

    fn to_move(&self) -> PlayerId {
        self.to_move
    }

    fn legal_actions_into(&self, out: &mut Vec<Action>) {
        for c in 0..COLUMNS {
            if (self.heights[c] as usize) < ROWS {
                out.push(Action::Column(c as u8));
            }
        }
    }

    fn apply(&mut self, action: Action) -> Result<(), String> {
        let Action::Column(c) = action else {
            return Err("Connect Four moves are columns written C<col>".into());
        };
        let c = c as usize;
        if c >= COLUMNS {
            return Err("column outside the 7-column grid".into());
        }
        let h = self.heights[c] as usize;
        if h >= ROWS {
            return Err("column is full".into());
        }
        let me = self.to_move.index();
        self.discs[me] |= bit(c, h);
        self.heights[c] += 1;
        self.outcome = if has_four(self.discs[me]) {
            Some(Outcome::Winner(self.to_move))
        } else if self.heights.iter().all(|&h| h as usize == ROWS) {
            Some(Outcome::Tie)
        } else {
            None
        };
        self.to_move = self.to_move.opponent();
        Ok(())
    }

    fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    /// Rows from top to bottom separated by `/`.
    fn observation(&self, _viewer: PlayerId) -> String {
        let mut s = String::with_capacity(ROWS * (COLUMNS + 1));
        for row in (0..ROWS).rev() {
            if row + 1 != ROWS {
                s.push('/');
            }
            for col in 0..COLUMNS {
                s.push(match self.at(col, row) {
                    Some(PlayerId::P1) => 'X',
                    Some(PlayerId::P2) => 'O',
                    None => '.',
                });
            }
        }
        s
    }
}
