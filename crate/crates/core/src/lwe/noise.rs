//! Bounded noise distributions with exactly computable masses.

use std::sync::OnceLock;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseKind {
    /// `ρ(x) = exp(-π x² / B²)` restricted to `[-B, B]`.
    TruncatedGaussian,
    /// Uniform over `[-B, B]`.
    UniformBox,
}

/// Per-coordinate noise of width `bound`, applied independently to each entry.
#[derive(Clone, Debug)]
pub struct NoiseDistribution {
    bound: u64,
    kind: NoiseKind,
    // only masses need it, and summing over a wide support is slow
    normalizer: OnceLock<f64>,
}

impl PartialEq for NoiseDistribution {
    fn eq(&self, other: &Self) -> bool {
        (self.bound, self.kind) == (other.bound, other.kind)
    }
}

impl NoiseDistribution {
    pub fn new(bound: u64, kind: NoiseKind) -> Self {
        Self { bound, kind, normalizer: OnceLock::new() }
    }

    fn normalizer(&self) -> f64 {
        *self.normalizer.get_or_init(|| (-(self.bound as i64)..=self.bound as i64).map(|x| self.weight(x)).sum())
    }

    pub fn gaussian(bound: u64) -> Self {
        Self::new(bound, NoiseKind::TruncatedGaussian)
    }

    pub fn uniform_box(bound: u64) -> Self {
        Self::new(bound, NoiseKind::UniformBox)
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    fn weight(&self, x: i64) -> f64 {
        if x.unsigned_abs() > self.bound {
            return 0.0;
        }
        match self.kind {
            NoiseKind::UniformBox => 1.0,
            NoiseKind::TruncatedGaussian => {
                if self.bound == 0 {
                    return 1.0;
                }
                let b = self.bound as f64;
                (-std::f64::consts::PI * (x as f64).powi(2) / (b * b)).exp()
            }
        }
    }

    /// Probability of the single coordinate value `x`.
    pub fn mass(&self, x: i64) -> f64 {
        self.weight(x) / self.normalizer()
    }

    /// Product mass of a vector of independent coordinates.
    pub fn vector_mass(&self, e: &[i64]) -> f64 {
        e.iter().map(|&x| self.mass(x)).product()
    }

    /// The support `[-B, B]` with masses, in increasing order.
    pub fn table(&self) -> Vec<(i64, f64)> {
        (-(self.bound as i64)..=self.bound as i64).map(|x| (x, self.mass(x))).collect()
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> i64 {
        let b = self.bound as i64;
        match self.kind {
            NoiseKind::UniformBox => rng.gen_range(-b..=b),
            NoiseKind::TruncatedGaussian if b == 0 => 0,
            NoiseKind::TruncatedGaussian => self.sample_gaussian(rng),
        }
    }

    pub fn sample_vec<R: RngCore + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<i64> {
        (0..len).map(|_| self.sample(rng)).collect()
    }

    /// Rejection sampling from a two-sided geometric proposal
    /// `P(x) ∝ exp(-|x|/t)` with `t = B/√(2π)`; the target/proposal log-ratio
    /// then peaks at 1/2.
    fn sample_gaussian<R: RngCore + ?Sized>(&self, rng: &mut R) -> i64 {
        let b = self.bound as f64;
        let t = b / (2.0 * std::f64::consts::PI).sqrt();
        let ratio = (-1.0 / t).exp();
        loop {
            let u: f64 = rng.gen::<f64>();
            let k = if u <= 0.0 { 0 } else { ((1.0 - u).ln() / ratio.ln()).floor() as i64 };
            let negative = rng.gen::<bool>();
            if negative && k == 0 {
                continue;
            }
            if k > self.bound as i64 {
                continue;
            }
            let x = if negative { -k } else { k };
            let xf = x as f64;
            let log_accept = -std::f64::consts::PI * xf * xf / (b * b) + xf.abs() / t - 0.5;
            if rng.gen::<f64>() < log_accept.exp() {
                return x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn masses_are_normalized_and_symmetric() {
        for kind in [NoiseKind::TruncatedGaussian, NoiseKind::UniformBox] {
            for bound in [0, 1, 2, 7, 100] {
                let d = NoiseDistribution::new(bound, kind);
                let total: f64 = d.table().iter().map(|(_, m)| m).sum();
                assert!((total - 1.0).abs() < 1e-12);
                for x in 0..=bound as i64 {
                    assert_eq!(d.mass(x), d.mass(-x));
                }
                assert_eq!(d.mass(bound as i64 + 1), 0.0);
            }
        }
    }

    #[test]
    fn mode_mass_matches_direct_normalization() {
        let d = NoiseDistribution::gaussian(5);
        let z: f64 = (-5i64..=5).map(|x| (-std::f64::consts::PI * (x * x) as f64 / 25.0).exp()).sum();
        assert!((d.mass(0) - 1.0 / z).abs() < 1e-15);
        assert!(d.table().iter().all(|&(_, m)| m <= d.mass(0)));
    }

    #[test]
    fn sampler_matches_masses() {
        let d = NoiseDistribution::gaussian(6);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let trials = 200_000;
        let mut counts = vec![0u32; 13];
        for _ in 0..trials {
            let x = d.sample(&mut rng);
            assert!(x.abs() <= 6);
            counts[(x + 6) as usize] += 1;
        }
        for (x, mass) in d.table() {
            let observed = counts[(x + 6) as usize] as f64 / trials as f64;
            let sigma = (mass * (1.0 - mass) / trials as f64).sqrt();
            assert!((observed - mass).abs() < 5.0 * sigma + 1e-4, "x={x} observed={observed} mass={mass}");
        }
    }

    #[test]
    fn box_sampler_stays_in_range() {
        let d = NoiseDistribution::uniform_box(3);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let v = d.sample_vec(1000, &mut rng);
        assert!(v.iter().all(|x| x.abs() <= 3));
        assert!(v.contains(&-3) && v.contains(&3));
    }
}
