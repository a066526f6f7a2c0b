use super::{Action, Outcome, PlayerId, Rules};

pub(crate) const INITIAL_PILES: [u8; 4] = [1, 3, 5, 7];

/// Misère Nim: whoever takes the last match loses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Nim {
    pub(crate) piles: [u8; 4],
    pub(crate) to_move: PlayerId,
}

impl Default for Nim {
    fn default() -> Self {
        Self::new()
    }
}

impl Nim {
    pub fn new() -> Self {
        Self::from_piles(INITIAL_PILES, PlayerId::P1)
    }

    pub fn from_piles(piles: [u8; 4], to_move: PlayerId) -> Self {
        Self { piles, to_move }
    }

    pub fn piles(&self) -> [u8; 4] {
        self.piles
    }
}

impl Rules for Nim {

    fn to_move(&self) -> PlayerId {
        self.to_move
    }

    fn legal_actions_into(&self, out: &mut Vec<Action>) {
        for (pile, &n) in self.piles.iter().enumerate() {
            for count in 1..=n {
                out.push(Action::Take { pile: pile as u8, count });
            }
        }
    }

    fn apply(&mut self, action: Action) -> Result<(), String> {
        let Action::Take { pile, count } = action else {
            return Err("Nim moves are written <pile:x, take:y>".into());
        };
        let p = pile as usize;
        if p >= self.piles.len() {
            return Err("there are only four piles".into());
        }
        if count == 0 {
            return Err("must take at least one match".into());
        }
        if count > self.piles[p] {
            return Err(format!("cannot take more than the {} match(es) left in the pile", self.piles[p]));
        }
        self.piles[p] -= count;
        self.to_move = self.to_move.opponent();
        Ok(())
    }

    /// The player who emptied the board took the last match and loses, so
    /// the player now to move wins.
    fn outcome(&self) -> Option<Outcome> {
        (self.piles == [0; 4]).then_some(Outcome::Winner(self.to_move))
    }

    fn observation(&self, _viewer: PlayerId) -> String {
        let p = self.piles;
        format!("{},{},{},{}", p[0], p[1], p[2], p[3])
    }
}
