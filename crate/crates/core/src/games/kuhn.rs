use rand::seq::SliceRandom;
use rand::Rng;

use super::{Action, Outcome, PlayerId, Rules};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KuhnCard {
    Jack,
    Queen,
    King,
}

impl KuhnCard {
    pub const ALL: [KuhnCard; 3] = [KuhnCard::Jack, KuhnCard::Queen, KuhnCard::King];

    pub fn letter(self) -> char {
        match self {
            KuhnCard::Jack => 'J',
            KuhnCard::Queen => 'Q',
            KuhnCard::King => 'K',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Kuhn Poker with the standard betting tree. Each player antes one chip;
/// pass-pass goes to showdown, a bet must be called (`<Bet>`) or folded
/// (`<Pass>`). Only the winner matters here, not the pot size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KuhnPoker {
    pub(crate) cards: [KuhnCard; 2],
    pub(crate) history: [Action; 3],
    pub(crate) len: u8,
}

impl KuhnPoker {
    pub fn deal(chance_seed: u64) -> Self {
        let mut deck = KuhnCard::ALL;
        deck.shuffle(&mut seed::rng(chance_seed));
        Self {
            cards: [deck[0], deck[1]],
            history: [Action::Pass; 3],
            len: 0,
        }
    }

    pub fn card(&self, p: PlayerId) -> KuhnCard {
        self.cards[p.index()]
    }

    pub fn history(&self) -> &[Action] {
        &self.history[..self.len as usize]
    }

    /// Betting history as a string of `p`/`b`.
    pub fn history_code(&self) -> String {
        self.history()
            .iter()
            .map(|a| if *a == Action::Bet { 'b' } else { 'p' })
            .collect()
    }

    fn showdown(&self) -> Outcome {
        if self.cards[0] > self.cards[1] {
            Outcome::Winner(PlayerId::P1)
        } else {
            Outcome::Winner(PlayerId::P2)
        }
    }
}

impl Rules for KuhnPoker {

    fn to_move(&self) -> PlayerId {
        if self.len.is_multiple_of(2) {
            PlayerId::P1
        } else {
            PlayerId::P2
        }
    }

    fn legal_actions_into(&self, out: &mut Vec<Action>) {
        out.extend([Action::Pass, Action::Bet]);
    }

    fn apply(&mut self, action: Action) -> Result<(), String> {
        if !matches!(action, Action::Pass | Action::Bet) {
            return Err("Kuhn Poker moves are <Pass> or <Bet>".into());
        }
        self.history[self.len as usize] = action;
        self.len += 1;
        Ok(())
    }

    fn outcome(&self) -> Option<Outcome> {
        use Action::{Bet as B, Pass as P};
        match self.history() {
            [P, P] | [B, B] | [P, B, B] => Some(self.showdown()),
            [B, P] => Some(Outcome::Winner(PlayerId::P1)),
            [P, B, P] => Some(Outcome::Winner(PlayerId::P2)),
            _ => None,
        }
    }

    /// Own card and the public betting history, e.g. `K:pb`.
    fn observation(&self, viewer: PlayerId) -> String {
        format!("{}:{}", self.card(viewer).letter(), self.history_code())
    }

    fn determinize<R: Rng + ?Sized>(&self, viewer: PlayerId, rng: &mut R) -> Self {
        let mine = self.card(viewer);
        let others: Vec<KuhnCard> = KuhnCard::ALL.into_iter().filter(|&c| c != mine).collect();
        let mut next = *self;
        next.cards[viewer.opponent().index()] = others[rng.random_range(0..others.len())];
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{new_game, Board, GameKind, GameResult};

    #[test]
    fn deal_gives_two_distinct_cards_and_is_seeded() {
        for seed in 0..50 {
            let s = new_game(GameKind::KuhnPoker, seed);
            let Board::KuhnPoker(k) = s.board() else { unreachable!() };
            assert_ne!(k.cards[0], k.cards[1]);
            assert_eq!(s, new_game(GameKind::KuhnPoker, seed));
        }
    }

    #[test]
    fn pass_pass_is_showdown() {
        let s = new_game(GameKind::KuhnPoker, 3)
            .apply_action(Action::Pass)
            .unwrap()
            .apply_action(Action::Pass)
            .unwrap();
        let Board::KuhnPoker(k) = s.board() else { unreachable!() };
        let o = s.terminal_outcome().unwrap();
        let p1_high = k.cards[0] > k.cards[1];
        assert_eq!(o.result_for(PlayerId::P1) == GameResult::Win, p1_high);
    }

    #[test]
    fn fold_concedes_regardless_of_cards() {
        let s = new_game(GameKind::KuhnPoker, 1);
        let s = s.apply_action(Action::Pass).unwrap().apply_action(Action::Bet).unwrap();
        assert!(!s.is_terminal());
        assert_eq!(s.to_move(), PlayerId::P1);
        let s = s.apply_action(Action::Pass).unwrap();
        assert_eq!(s.terminal_outcome(), Some(Outcome::Winner(PlayerId::P2)));
        assert_eq!(s.move_count(), 3);
    }

    #[test]
    fn observation_hides_opponent_card() {
        // Find two deals where P1 holds the same card but P2 differs.
        let mut by_p1 = std::collections::HashMap::new();
        for seed in 0..100 {
            let s = new_game(GameKind::KuhnPoker, seed);
            let Board::KuhnPoker(k) = s.board() else { unreachable!() };
            by_p1.entry(k.cards[0]).or_insert_with(Vec::new).push((k.cards[1], s));
        }
        let deals = by_p1.values().find(|v| v.iter().any(|(c, _)| *c != v[0].0)).unwrap();
        let a = deals[0].1;
        let b = deals.iter().find(|(c, _)| *c != deals[0].0).unwrap().1;
        assert_ne!(a, b);
        for act in [Action::Pass, Action::Bet] {
            assert_eq!(a.canonical_key(act), b.canonical_key(act));
        }
        assert_eq!(a.observation(PlayerId::P1), b.observation(PlayerId::P1));
    }
}
