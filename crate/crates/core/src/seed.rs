//! Deterministic sub-seed derivation.
//!
//! Every random stream in a run is derived from one root seed. A stream is
//! named by a label and an index; its seed is
//! `splitmix64(root ^ splitmix64(fnv1a(label) + index))`. Streams are never
//! shared between consumers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stream in the workspace.
pub type StreamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Seed for stream `(label, index)` under `root`.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    splitmix64(root ^ splitmix64(fnv1a(label).wrapping_add(index)))
}

pub fn stream(root: u64, label: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(root, label, index))
}
