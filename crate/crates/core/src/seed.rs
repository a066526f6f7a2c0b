//! Deterministic seed derivation.
//!
//! Every random stream in a run is derived from the master seed by mixing in
//! stable labels, so any episode can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::games::GameKind;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn combine(a: u64, b: u64) -> u64 {
    mix64(a ^ mix64(b))
}

/// Seeds for one episode: `chance` drives deals and dice, `sampling` drives
/// every agent decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EpisodeSeeds {
    pub chance: u64,
    pub sampling: u64,
}

impl EpisodeSeeds {
    pub fn derive(master: u64, game: GameKind, episode: u64) -> Self {
        let base = combine(combine(master, game.index() as u64 + 1), episode);
        Self {
            chance: combine(base, 0xC4A9),
            sampling: combine(base, 0x5A3F),
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
