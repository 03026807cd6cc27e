//! Reproducible random streams.
//!
//! Every independent unit of work (a bootstrap resample, a limit-law
//! replicate, a study replication) draws from its own generator whose seed
//! is derived from a master seed and a path of integer keys. Results are
//! therefore independent of how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stream in the crate.
pub type Stream = ChaCha8Rng;

/// Purpose tags so that streams for different roles never collide even when
/// their numeric keys coincide.
pub mod tag {
    pub const SERIES: u64 = 0x5345_5249;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const LIMIT: u64 = 0x4c49_4d54;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `seed` with each key in `path` into a single 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Generator for the substream identified by `(seed, path)`.
pub fn substream(seed: u64, path: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(seed, path))
}
