//! Seed derivation.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream whose
//! 64-bit seed is `derive_seed(master, tag)`. `derive_seed` is the
//! SplitMix64 finalizer applied to `master ^ mix64(tag + φ)`, where `φ` is
//! the 64-bit golden-ratio constant. Tags are the [`Stream`] discriminants;
//! replication `r` of a campaign uses `derive_seed(derive_seed(master,
//! Stream::Replication), r)` as its own master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Purpose tags for derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    StepNoise = 1,
    XJumps = 2,
    SigmaJumps = 3,
    FLimit = 4,
    LLimit = 5,
    Replication = 6,
    Probe = 7,
    Compensator = 8,
    Quadrature = 9,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, tag: u64) -> u64 {
    mix64(master ^ mix64(tag.wrapping_add(GOLDEN)))
}

pub fn stream(master: u64, purpose: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, purpose as u64))
}

/// Master seed of replication `index` within a campaign.
pub fn replication_seed(master: u64, index: u64) -> u64 {
    derive_seed(derive_seed(master, Stream::Replication as u64), index)
}
