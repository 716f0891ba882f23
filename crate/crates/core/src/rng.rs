//! Deterministic per-stage, per-item random streams.
//!
//! Every random draw in the crate comes from a stream keyed by `(seed, tag, index)`, so
//! results do not depend on how work is split across threads.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ fnv1a(tag)) ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize, std: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| std * rng.sample::<f64, _>(StandardNormal))
}

/// Uniform draw from the unit sphere `𝕊^{n-1}`.
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let g = gaussian_vector(rng, n, 1.0);
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}
