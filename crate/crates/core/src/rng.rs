//! Seeded substreams and standard-normal sampling.
//!
//! Every unit of parallel work (a shot range of one channel, a chunk of Monte
//! Carlo trials) owns a ChaCha20 stream selected by `(seed, purpose, index)`,
//! so results do not depend on how work is scheduled across threads.
//! Normals come from the Box–Muller transform on 53-bit uniforms, which is
//! straightforward to reproduce outside Rust.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Identifier recorded in dataset metadata.
pub const RNG_ALGORITHM: &str = "chacha20-stream/box-muller-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    ShotsX = 1,
    ShotsP = 2,
    MonteCarlo = 3,
}

/// Generator for work unit `index` of `purpose` under `seed`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha20Rng {
    debug_assert!(index < 1 << 48);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | index);
    rng
}

/// SplitMix64 mix of `(seed, index)`: independent seeds for sweep cells.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform on `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal pair via Box–Muller.
#[inline]
pub fn normal_pair<R: RngCore>(rng: &mut R) -> (f64, f64) {
    // 1 - u lies in (0, 1], keeping the logarithm finite.
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    let radius = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (radius * c, radius * s)
}
