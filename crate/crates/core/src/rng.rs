//! Deterministic random streams.
//!
//! Every randomized routine derives its generator from a master seed, a
//! purpose tag and an index (replication, subsample, chunk). The resulting
//! stream depends only on that triple, so parallel schedules and thread
//! counts never change the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Distinct tags keep different consumers of one seed independent.
pub mod tag {
    pub const LIMIT_LAW: u64 = 0x004c_494d_4954;
    pub const SUBSAMPLE: u64 = 0x5355_4253;
    pub const INTERMEDIATE_SUBSAMPLE: u64 = 0x4956_5453;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const REPLICATION: u64 = 0x5245_504c;
    pub const DGP: u64 = 0x0044_4750;
    pub const NOISE: u64 = 0x4e4f_4953;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a tag and an index into a new 64-bit seed.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Generator for stream `index` under `tag`.
pub fn substream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}
