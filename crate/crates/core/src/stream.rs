//! Deterministic seed derivation and RNG construction.
//!
//! Every random decision in the pipeline draws from a ChaCha stream whose
//! seed is derived from the run seed plus a textual tag and integer
//! indices. Tasks scheduled in parallel each get their own pre-assigned
//! substream, so results never depend on thread count or scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of the splitmix64 mixing function.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a base seed, a purpose tag, and indices.
///
/// The tag is folded in byte-by-byte (FNV-1a), then each index through
/// splitmix64, so `derive(s, "fit", &[k, f])` and `derive(s, "fit", &[f, k])`
/// differ.
pub fn derive(base: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in tag.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut state = splitmix64(base ^ h);
    for &ix in indices {
        state = splitmix64(state ^ ix);
    }
    state
}

/// Deterministic RNG for a derived seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for a derived substream in one call.
pub fn rng_for(base: u64, tag: &str, indices: &[u64]) -> ChaCha8Rng {
    rng(derive(base, tag, indices))
}
