//! Estimators and distribution diagnostics.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigUint;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{zq_rank, BitString, ZqMatrix};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("densities are defined over different supports")]
    SupportMismatch,
    #[error("density sums to {0}, not 1")]
    NotNormalized(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error("emitter failed: {0}")]
    Emit(String),
}

/// Standard 95% Wilson score interval.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials >= 1 && successes <= trials, "need 0 ≤ successes ≤ trials, trials ≥ 1");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// A proportion with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl RateEstimate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = if trials == 0 { (0.0, 1.0) } else { wilson_interval(successes, trials) };
        let estimate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        Self { trials, successes, estimate, ci_low, ci_high }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }

    /// Binomial standard error of the point estimate.
    pub fn sigma(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }

    pub fn merge(&self, other: &RateEstimate) -> RateEstimate {
        RateEstimate::new(self.successes + other.successes, self.trials + other.trials)
    }
}

/// A finite distribution as a map from outcomes to masses. Outcomes listed
/// with mass zero still count as part of the support universe.
#[derive(Clone, Debug, PartialEq)]
pub struct Density<K: Ord> {
    masses: BTreeMap<K, f64>,
}

/// Densities built from observed counts.
pub type EmpiricalDensity<K> = Density<K>;

impl<K: Ord + Clone> Density<K> {
    /// Masses as given; repeated outcomes accumulate.
    pub fn from_masses<I: IntoIterator<Item = (K, f64)>>(items: I) -> Self {
        let mut masses = BTreeMap::new();
        for (k, p) in items {
            *masses.entry(k).or_insert(0.0) += p;
        }
        Self { masses }
    }

    /// Normalized counts over `universe` (outcomes outside it are added).
    pub fn from_samples<U, I>(universe: U, samples: I) -> Self
    where
        U: IntoIterator<Item = K>,
        I: IntoIterator<Item = K>,
    {
        let mut counts: BTreeMap<K, u64> = universe.into_iter().map(|k| (k, 0)).collect();
        let mut total = 0u64;
        for s in samples {
            *counts.entry(s).or_insert(0) += 1;
            total += 1;
        }
        let masses = counts
            .into_iter()
            .map(|(k, c)| (k, if total == 0 { 0.0 } else { c as f64 / total as f64 }))
            .collect();
        Self { masses }
    }

    pub fn mass(&self, k: &K) -> f64 {
        self.masses.get(k).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, f64)> {
        self.masses.iter().map(|(k, &p)| (k, p))
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.masses.keys()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum()
    }

    pub fn check_normalized(&self) -> Result<(), StatsError> {
        let total = self.total_mass();
        if (total - 1.0).abs() > 1e-12 {
            return Err(StatsError::NotNormalized(format!("{total}")));
        }
        Ok(())
    }
}

/// `(1/2)·Σ |D0(x) − D1(x)|` over a shared support universe.
pub fn statistical_distance<K: Ord + Clone>(d0: &Density<K>, d1: &Density<K>) -> Result<f64, StatsError> {
    if !d0.support().eq(d1.support()) {
        return Err(StatsError::SupportMismatch);
    }
    Ok(0.5 * d0.iter().map(|(k, p)| (p - d1.mass(k)).abs()).sum::<f64>())
}

/// Fraction of uniform `a×b` matrices over `Z_q` with rank below `min(a,b)`.
/// Enumerates every matrix when there are at most `samples` of them, and
/// samples otherwise.
pub fn rank_deficiency_rate<R: RngCore + ?Sized>(
    q: u64,
    a: usize,
    b: usize,
    samples: u64,
    rng: &mut R,
) -> Result<RateEstimate, StatsError> {
    if a > b || a == 0 || q < 2 {
        return Err(StatsError::InvalidArguments("need 1 ≤ a ≤ b and q ≥ 2".into()));
    }
    let cells = (a * b) as u32;
    let full = a.min(b);
    let modulus = BigUint::from(q);
    let space = (q as u128).checked_pow(cells);
    if let Some(total) = space.filter(|&t| t <= samples as u128) {
        let mut deficient = 0u64;
        for idx in 0..total as u64 {
            let entries: Vec<BigUint> =
                (0..cells).map(|c| BigUint::from(idx / q.pow(c) % q)).collect();
            let m = ZqMatrix::from_entries(a, b, &modulus, entries).expect("shape");
            if zq_rank(&m) < full {
                deficient += 1;
            }
        }
        return Ok(RateEstimate::new(deficient, total as u64));
    }
    let mut deficient = 0u64;
    for _ in 0..samples {
        let m = ZqMatrix::random(a, b, &modulus, rng);
        if zq_rank(&m) < full {
            deficient += 1;
        }
    }
    Ok(RateEstimate::new(deficient, samples))
}

/// Outcome of [`modmat_bias_probe`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    /// `max |Pr[d̂·s = 0 | Cs = v] − 1/2|` over probed `(v, d̂)`.
    pub max_bias: f64,
    /// The conditional rate of `d̂·s = 0` at the worst pair.
    pub worst: RateEstimate,
    pub buckets_probed: usize,
    pub directions_probed: usize,
}

/// Number of nonzero directions `d̂` examined per probe.
pub const MODMAT_DIRECTIONS: usize = 8;

/// Conditional bias of `d̂·s mod 2` given `C·s mod q`, for one fixed uniform
/// `C ∈ Z_q^{l×n}`, `s ← {0,1}^n` and several nonzero `d̂`.
pub fn modmat_bias_probe<R: RngCore + ?Sized>(
    q: u64,
    l: usize,
    n: usize,
    samples: u64,
    rng: &mut R,
) -> Result<BiasReport, StatsError> {
    if q < 2 || l == 0 || n == 0 {
        return Err(StatsError::InvalidArguments("need q ≥ 2, l ≥ 1, n ≥ 1".into()));
    }
    let buckets = (q as u128).checked_pow(l as u32).filter(|&b| b <= 1 << 20).ok_or_else(|| {
        StatsError::InsufficientSamples("q^l is too large to condition on every value".into())
    })? as usize;
    let min_per_bucket = 100u64;
    if samples < min_per_bucket * buckets as u64 {
        return Err(StatsError::InsufficientSamples(format!(
            "need at least {} samples for {buckets} conditioning values",
            min_per_bucket * buckets as u64
        )));
    }
    let c: Vec<u64> = (0..l * n).map(|_| rng.gen_range(0..q)).collect();
    let directions: Vec<BitString> = (0..MODMAT_DIRECTIONS).map(|_| BitString::random_nonzero(n, rng)).collect();
    // counts[bucket] = (total, zeros per direction)
    let mut totals = vec![0u64; buckets];
    let mut zeros = vec![0u64; buckets * directions.len()];
    for _ in 0..samples {
        let s = BitString::random(n, rng);
        let mut bucket = 0usize;
        for row in 0..l {
            let mut acc = 0u64;
            for j in 0..n {
                if s.get(j) {
                    acc = (acc + c[row * n + j]) % q;
                }
            }
            bucket = bucket * q as usize + acc as usize;
        }
        totals[bucket] += 1;
        for (k, d) in directions.iter().enumerate() {
            if !crate::algebra::gf2_dot(d, &s).expect("equal lengths") {
                zeros[bucket * directions.len() + k] += 1;
            }
        }
    }
    let threshold = (samples / (10 * buckets as u64)).max(min_per_bucket);
    let mut worst: Option<(f64, RateEstimate)> = None;
    let mut probed = 0;
    for (bucket, &total) in totals.iter().enumerate() {
        if total < threshold {
            continue;
        }
        probed += 1;
        for k in 0..directions.len() {
            let est = RateEstimate::new(zeros[bucket * directions.len() + k], total);
            let bias = (est.estimate - 0.5).abs();
            if worst.as_ref().is_none_or(|(b, _)| bias > *b) {
                worst = Some((bias, est));
            }
        }
    }
    let (max_bias, worst) = worst.ok_or_else(|| {
        StatsError::InsufficientSamples("no conditioning value received enough samples".into())
    })?;
    Ok(BiasReport { max_bias, worst, buckets_probed: probed, directions_probed: directions.len() })
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), StatsError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| StatsError::Emit(e.to_string()))?;
    }
    w.flush().map_err(|e| StatsError::Emit(e.to_string()))
}

/// Pretty JSON for any report.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, StatsError> {
    serde_json::to_string_pretty(value).map_err(|e| StatsError::Emit(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn wilson_examples() {
        assert_eq!(wilson_interval(0, 40).0, 0.0);
        assert_eq!(wilson_interval(40, 40).1, 1.0);
        let (lo, hi) = wilson_interval(50, 100);
        // closed form: center 0.5, half-width z·√(0.25/100 + z²/40000)/(1 + z²/100)
        let z = Z_95;
        let half = z * (0.25 / 100.0 + z * z / 40000.0).sqrt() / (1.0 + z * z / 100.0);
        assert!((lo - (0.5 - half)).abs() < 1e-12 && (hi - (0.5 + half)).abs() < 1e-12);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
    }

    #[test]
    fn wilson_width_shrinks_with_trials() {
        let (a_lo, a_hi) = wilson_interval(500, 1000);
        let (b_lo, b_hi) = wilson_interval(2000, 4000);
        let ratio = (a_hi - a_lo) / (b_hi - b_lo);
        assert!((ratio - 2.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn statistical_distance_examples() {
        let d0 = Density::from_masses([(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.4)]);
        let d1 = Density::from_masses([(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)]);
        assert_eq!(statistical_distance(&d0, &d0).unwrap(), 0.0);
        // hand sum: (0.15 + 0.05 + 0.05 + 0.15) / 2 = 0.2
        assert!((statistical_distance(&d0, &d1).unwrap() - 0.2).abs() < 1e-15);
        let a = Density::from_masses([(0, 1.0), (1, 0.0)]);
        let b = Density::from_masses([(0, 0.0), (1, 1.0)]);
        assert_eq!(statistical_distance(&a, &b).unwrap(), 1.0);
        let c = Density::from_masses([(5, 1.0)]);
        assert_eq!(statistical_distance(&a, &c), Err(StatsError::SupportMismatch));
    }

    #[test]
    fn rank_deficiency_enumeration() {
        let r = rank_deficiency_rate(2, 2, 2, 16, &mut rng(0)).unwrap();
        assert_eq!((r.successes, r.trials), (10, 16));
        assert_eq!(r.estimate, 0.625);
        let r = rank_deficiency_rate(2, 1, 1, 16, &mut rng(0)).unwrap();
        assert_eq!(r.estimate, 0.5);
    }

    #[test]
    fn rank_deficiency_large_field() {
        let r = rank_deficiency_rate(2_147_483_647, 3, 4, 10_000, &mut rng(1)).unwrap();
        assert_eq!(r.successes, 0);
    }

    #[test]
    fn modmat_guards() {
        assert!(matches!(modmat_bias_probe(3, 1, 120, 10, &mut rng(2)), Err(StatsError::InsufficientSamples(_))));
    }

    #[test]
    fn modmat_small_n_is_biased() {
        let report = modmat_bias_probe(3, 1, 4, 20_000, &mut rng(3)).unwrap();
        assert!(report.max_bias > 0.1, "{report:?}");
    }

    #[test]
    fn densities_from_samples() {
        let d = Density::from_samples(0..4, [0, 0, 1, 3]);
        assert_eq!(d.mass(&0), 0.5);
        assert_eq!(d.mass(&2), 0.0);
        assert_eq!(d.support().count(), 4);
        d.check_normalized().unwrap();
    }

    #[test]
    fn csv_and_json_emitters() {
        let rows = vec![RateEstimate::new(3, 10), RateEstimate::new(5, 10)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trials,successes,estimate,ci_low,ci_high"));
        assert_eq!(text.lines().count(), 3);
        assert!(to_json(&rows[0]).unwrap().contains("\"successes\": 3"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn density(weights: &[f64]) -> Density<usize> {
            let total: f64 = weights.iter().sum();
            Density::from_masses(weights.iter().enumerate().map(|(i, w)| (i, w / total)))
        }

        proptest! {
            #[test]
            fn triangle_and_symmetry(
                a in proptest::collection::vec(0.01f64..1.0, 6),
                b in proptest::collection::vec(0.01f64..1.0, 6),
                c in proptest::collection::vec(0.01f64..1.0, 6),
            ) {
                let (da, db, dc) = (density(&a), density(&b), density(&c));
                let ab = statistical_distance(&da, &db).unwrap();
                let ba = statistical_distance(&db, &da).unwrap();
                let bc = statistical_distance(&db, &dc).unwrap();
                let ac = statistical_distance(&da, &dc).unwrap();
                prop_assert!((ab - ba).abs() < 1e-12);
                prop_assert!(ac <= ab + bc + 1e-12);
            }

            #[test]
            fn hellinger_sandwiches_distance(
                a in proptest::collection::vec(0.01f64..1.0, 6),
                b in proptest::collection::vec(0.01f64..1.0, 6),
            ) {
                let (da, db) = (density(&a), density(&b));
                let h2 = crate::lwe::hellinger(&da, &db).unwrap();
                let tv = statistical_distance(&da, &db).unwrap();
                prop_assert!(h2 <= tv + 1e-12);
                prop_assert!(tv <= (2.0 * h2).sqrt() + 1e-12);
            }
        }
    }
}
