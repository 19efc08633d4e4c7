//! Deterministic random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream derived from the
//! run seed, a domain tag and an index, so results do not depend on the
//! order in which parallel tasks execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating independent uses of the same seed.
pub mod tag {
    pub const BOOTSTRAP_TREATED: u64 = 0x7472_6561_7465_6400;
    pub const BOOTSTRAP_CONTROL: u64 = 0x636f_6e74_726f_6c00;
    pub const MC_DATA: u64 = 0x6d63_6461_7461_0000;
    pub const MC_POINT: u64 = 0x6d63_706f_696e_7400;
    pub const MC_BOOT: u64 = 0x6d63_626f_6f74_0000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a tag and index into a new 64-bit seed.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index)
}

/// Independent stream for `(seed, tag, index)`.
pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, 0));
    rng.set_stream(index);
    rng
}
