//! Named, reproducible RNG substreams.
//!
//! Every source of randomness in an experiment (per-UAV exploration, channel
//! fading draws, sensing draws, Monte Carlo trials) pulls from its own
//! substream derived from `(master_seed, replica, label)`. Streams are
//! independent by construction, so adding or removing draws from one consumer
//! never perturbs the sequences seen by the others.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used throughout the crate. ChaCha output is specified by the
/// cipher, so sequences are identical across platforms and releases.
pub type Rng = ChaCha8Rng;

/// FNV-1a, used only to fold stream labels into the seed material.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// SplitMix64 step; a cheap, well-mixed expansion of seed material.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the substream identified by `(master_seed, replica, label, index)`.
///
/// `index` distinguishes homogeneous consumers, e.g. one exploration stream
/// per UAV.
pub fn substream(master_seed: u64, replica: u64, label: &str, index: u64) -> Rng {
    let mut state = master_seed
        ^ fnv1a(label.as_bytes())
        ^ replica.wrapping_mul(0xa076_1d64_78bd_642f)
        ^ index.wrapping_mul(0xe703_7ed1_a0b4_28db);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
