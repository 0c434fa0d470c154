//! Reproducible random-number plumbing.
//!
//! Every simulated sample window draws from its own generator, seeded by a
//! fixed mixing function of (master seed, window index). Partitioning
//! windows across worker threads therefore cannot change any draw: results
//! are byte-identical for any worker count and any chunking.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for all simulation draws.
pub type SimRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Bijective on u64, so distinct inputs yield
/// distinct outputs.
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the `index`-th subsequence of `master`.
///
/// This is the SplitMix64 stream started at `master`: state_i = master +
/// (i+1)·γ with γ odd, finalized bijectively. Distinct indices always map
/// to distinct child seeds for a fixed master.
pub fn child_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Generator for one sample window (or any other indexed subsequence).
pub fn stream_rng(master: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(child_seed(master, index))
}
