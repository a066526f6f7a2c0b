use rand::Rng;

use super::{Action, Outcome, PlayerId, Rules};
use crate::seed;

pub(crate) const FACES: u8 = 6;
pub(crate) const MAX_QUANTITY: u8 = 2;
pub(crate) const NUM_BIDS: usize = (FACES * MAX_QUANTITY) as usize;

/// Zero-based position of a bid in the canonical (quantity, face) order.
pub(crate) fn bid_index(quantity: u8, face: u8) -> usize {
    (quantity as usize - 1) * FACES as usize + (face as usize - 1)
}

pub(crate) fn bid_at(index: usize) -> Action {
    Action::Bid {
        quantity: (index / FACES as usize) as u8 + 1,
        face: (index % FACES as usize) as u8 + 1,
    }
}

/// Two-player Liar's Dice with one die each. A bid must raise the quantity,
/// or keep it and raise the face. Once a bid stands the next player may call
/// `<Liar>`; an exact or under-stated bid defeats the challenger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LiarsDice {
    pub(crate) dice: [u8; 2],
    pub(crate) last_bid: Option<(u8, u8)>,
    pub(crate) to_move: PlayerId,
    pub(crate) challenged: bool,
}

impl LiarsDice {
    pub fn roll(chance_seed: u64) -> Self {
        let mut rng = seed::rng(chance_seed);
        Self {
            dice: [rng.random_range(1..=FACES), rng.random_range(1..=FACES)],
            last_bid: None,
            to_move: PlayerId::P1,
            challenged: false,
        }
    }

    pub fn die(&self, p: PlayerId) -> u8 {
        self.dice[p.index()]
    }

    pub fn last_bid(&self) -> Option<(u8, u8)> {
        self.last_bid
    }

    fn bid_allowed(&self, quantity: u8, face: u8) -> bool {
        match self.last_bid {
            None => true,
            Some((q, f)) => quantity > q || (quantity == q && face > f),
        }
    }
}

impl Rules for LiarsDice {

    fn to_move(&self) -> PlayerId {
        self.to_move
    }

    fn legal_actions_into(&self, out: &mut Vec<Action>) {
        let start = self.last_bid.map_or(0, |(q, f)| bid_index(q, f) + 1);
        out.extend((start..NUM_BIDS).map(bid_at));
        if self.last_bid.is_some() {
            out.push(Action::Challenge);
        }
    }

    fn apply(&mut self, action: Action) -> Result<(), String> {
        match action {
            Action::Bid { quantity, face } => {
                if !(1..=MAX_QUANTITY).contains(&quantity) || !(1..=FACES).contains(&face) {
                    return Err("bids name 1-2 dice with a face value 1-6".into());
                }
                if !self.bid_allowed(quantity, face) {
                    return Err("a bid must raise the quantity, or keep it and raise the face value".into());
                }
                self.last_bid = Some((quantity, face));
            }
            Action::Challenge => {
                if self.last_bid.is_none() {
                    return Err("the first move must be a bid".into());
                }
                self.challenged = true;
            }
            _ => return Err("Liar's Dice moves are <x dices, y value> or <Liar>".into()),
        }
        self.to_move = self.to_move.opponent();
        Ok(())
    }

    fn outcome(&self) -> Option<Outcome> {
        if !self.challenged {
            return None;
        }
        let (q, f) = self.last_bid?;
        // After the challenge `to_move` flipped back to the bidder.
        let bidder = self.to_move;
        let count = self.dice.iter().filter(|&&d| d == f).count() as u8;
        Some(if count >= q {
            Outcome::Winner(bidder)
        } else {
            Outcome::Winner(bidder.opponent())
        })
    }

    /// Own die and the standing bid, e.g. `4:2x5` or `4:-`.
    fn observation(&self, viewer: PlayerId) -> String {
        match self.last_bid {
            Some((q, f)) => format!("{}:{}x{}", self.die(viewer), q, f),
            None => format!("{}:-", self.die(viewer)),
        }
    }

    fn determinize<R: Rng + ?Sized>(&self, viewer: PlayerId, rng: &mut R) -> Self {
        let mut next = *self;
        next.dice[viewer.opponent().index()] = rng.random_range(1..=FACES);
        next
    }
}
