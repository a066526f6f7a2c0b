use super::{Action, Outcome, PlayerId, Rules};

pub(crate) const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

/// 3x3 board; cells row-major, 0 empty, 1 = P1 (X), 2 = P2 (O).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TicTacToe {
    pub(crate) cells: [u8; 9],
    pub(crate) to_move: PlayerId,
    pub(crate) outcome: Option<Outcome>,
}

impl Default for TicTacToe {
    fn default() -> Self {
        Self::new()
    }
}

impl TicTacToe {
    pub fn new() -> Self {
        Self {
            cells: [0; 9],
            to_move: PlayerId::P1,
            outcome: None,
        }
    }

    pub fn cells(&self) -> &[u8; 9] {
        &self.cells
    }

    pub(crate) fn mark(p: PlayerId) -> u8 {
        p.index() as u8 + 1
    }

    pub(crate) fn winner(cells: &[u8; 9]) -> Option<u8> {
        LINES.iter().find_map(|&[a, b, c]| {
            (cells[a] != 0 && cells[a] == cells[b] && cells[b] == cells[c]).then_some(cells[a])
        })
    }
}

impl Rules for TicTacToe {

    fn to_move(&self) -> PlayerId {
        self.to_move
    }

    fn legal_actions_into(&self, out: &mut Vec<Action>) {
        for (i, &c) in self.cells.iter().enumerate() {
            if c == 0 {
                out.push(Action::Cell {
                    col: (i % 3) as u8,
                    row: (i / 3) as u8,
                });
            }
        }
    }

    fn apply(&mut self, action: Action) -> Result<(), String> {
        let Action::Cell { col, row } = action else {
            return Err("Tic-Tac-Toe moves are cells written C<col>R<row>".into());
        };
        if col > 2 || row > 2 {
            return Err("cell outside the 3x3 grid".into());
        }
        let idx = row as usize * 3 + col as usize;
        if self.cells[idx] != 0 {
            return Err("cell is already occupied".into());
        }
        self.cells[idx] = Self::mark(self.to_move);
        self.outcome = match Self::winner(&self.cells) {
            Some(1) => Some(Outcome::Winner(PlayerId::P1)),
            Some(_) => Some(Outcome::Winner(PlayerId::P2)),
            None if self.cells.iter().all(|&c| c != 0) => Some(Outcome::Tie),
            None => None,
        };
        self.to_move = self.to_move.opponent();
        Ok(())
    }

    fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    fn observation(&self, _viewer: PlayerId) -> String {
        self.cells
            .iter()
            .map(|&c| match c {
                1 => 'X',
                2 => 'O',
                _ => '.',
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{new_game, GameKind, GameResult};

    fn cell(c: u8, r: u8) -> Action {
        Action::Cell { col: c - 1, row: r - 1 }
    }

    #[test]
    fn initial_state_is_empty_with_p1_to_move() {
        let s = new_game(GameKind::TicTacToe, 99);
        assert_eq!(s.legal_actions().len(), 9);
        assert_eq!(s.to_move(), PlayerId::P1);
        assert_eq!(s.observation(PlayerId::P1).encoding, ".........");
    }

    #[test]
    fn c1r2_marks_first_column_second_row() {
        let s = new_game(GameKind::TicTacToe, 0).apply_action(cell(1, 2)).unwrap();
        assert_eq!(s.observation(PlayerId::P1).encoding, "...X.....");
        assert_eq!(s.to_move(), PlayerId::P2);
    }

    #[test]
    fn three_in_a_row_wins() {
        let mut s = new_game(GameKind::TicTacToe, 0);
        for a in [cell(1, 1), cell(1, 2), cell(2, 1), cell(2, 2), cell(3, 1)] {
            s = s.apply_action(a).unwrap();
        }
        let o = s.terminal_outcome().unwrap();
        assert_eq!(o.result_for(PlayerId::P1), GameResult::Win);
        assert_eq!(o.result_for(PlayerId::P2), GameResult::Lose);
        assert!(s.legal_actions().is_empty());
    }

    #[test]
    fn full_board_without_line_ties() {
        // X O X / X O O / O X X
        let moves = [
            cell(1, 1),
            cell(2, 1),
            cell(3, 1),
            cell(2, 2),
            cell(1, 2),
            cell(3, 2),
            cell(2, 3),
            cell(1, 3),
            cell(3, 3),
        ];
        let mut s = new_game(GameKind::TicTacToe, 0);
        for a in moves {
            s = s.apply_action(a).unwrap();
        }
        assert_eq!(s.terminal_outcome(), Some(Outcome::Tie));
    }
}
