//! Seeded random unimodular maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::UnimodularMap;

/// Shear parameter range for random maps.
pub const SHEAR_RANGE: f64 = 3.0;
/// Diagonal (log-stretch) parameter range for random maps.
pub const STRETCH_RANGE: f64 = 1.0;

/// Draws `shear(s)·diag(eᵘ, e⁻ᵘ)` with `s ∈ [−3, 3]`, `u ∈ [−1, 1]`.
pub fn random_unimodular<R: Rng + ?Sized>(rng: &mut R) -> UnimodularMap {
    let s = rng.random_range(-SHEAR_RANGE..=SHEAR_RANGE);
    let u = rng.random_range(-STRETCH_RANGE..=STRETCH_RANGE);
    UnimodularMap::shear(s).mul(&UnimodularMap::diag(u))
}

/// Deterministic stream of random unimodular maps.
pub struct UnimodularSampler {
    rng: ChaCha8Rng,
}

impl UnimodularSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Iterator for UnimodularSampler {
    type Item = UnimodularMap;

    fn next(&mut self) -> Option<UnimodularMap> {
        Some(random_unimodular(&mut self.rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_unimodular() {
        let a: Vec<_> = UnimodularSampler::new(7).take(20).collect();
        let b: Vec<_> = UnimodularSampler::new(7).take(20).collect();
        assert_eq!(a, b);
        for m in &a {
            assert!((m.det() - 1.0).abs() < 1e-12);
        }
        let c: Vec<_> = UnimodularSampler::new(8).take(20).collect();
        assert_ne!(a, c);
    }
}
