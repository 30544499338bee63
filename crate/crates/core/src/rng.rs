//! Counter-based random streams.
//!
//! Every random draw in a run is taken from a ChaCha stream addressed by
//! `(seed, episode, stage)`, so results do not depend on the order in which
//! episodes or stages are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Words reserved per stage inside an episode stream.
const STAGE_WORDS: u128 = 1 << 40;

/// RNG for one `(seed, episode, stage)` cell.
pub fn stage_rng(seed: u64, episode: u64, stage: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng.set_word_pos(stage as u128 * STAGE_WORDS);
    rng
}

/// Derives an independent seed for a named purpose (e.g. data collection vs
/// privileged evaluation) from a run seed.
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
