//! Seed derivation.
//!
//! Every random stream in the toolkit is a `ChaCha8Rng` seeded from a 64-bit
//! value produced by [`derive`]. A child seed is the SplitMix64 finalizer
//! applied successively to `parent ^ tag` and then to each path component:
//!
//! ```text
//! h0 = mix(parent ^ tag)
//! h1 = mix(h0 ^ c1), h2 = mix(h1 ^ c2), ...
//! ```
//!
//! Streams are therefore addressable: instance `i` of a dataset can be
//! regenerated without materializing instances `0..i`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep unrelated streams apart even for equal numeric seeds.
pub mod tag {
    pub const COORDS: u64 = 0x636f_6f72_6473;
    pub const DEMANDS: u64 = 0x6465_6d61_6e64;
    pub const DEPOT: u64 = 0x6465_706f_74;
    pub const MUTATION: u64 = 0x6d75_7461_7465;
    pub const TEST: u64 = 0x7465_7374;
    pub const TRAIN: u64 = 0x7472_6169_6e;
    pub const EPOCH: u64 = 0x6570_6f63_68;
    pub const SOLVER: u64 = 0x736f_6c76_6572;
    pub const REPEAT: u64 = 0x7265_7065_6174;
}

/// SplitMix64 output function.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(parent: u64, tag: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(parent ^ tag), |h, &c| mix(h ^ c))
}

pub fn rng(parent: u64, tag: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(parent, tag, path))
}
