//! Gadget lattice trapdoor.
//!
//! The public matrix is `A = [Ā ; R·Ā + Gᵀ]` (m×k), with `Ā` uniform
//! (m̄×k), `R` a small ternary matrix (w×m̄) and `Gᵀ` the base-`B` gadget
//! (w×k, row `i·ℓ + j` holds `B^j` in column `i`). For `y = A·s + e`,
//! `y₂ − R·y₁ = Gᵀ·s + (e₂ − R·e₁)`, which is decoded one coordinate of `s`
//! at a time from its noisy multiples `B^j·s_i mod q`.

use rand::{Rng, RngCore};
use thiserror::Error;

use super::matrix::{center, inf_norm, sub_mod, LweMatrix};
use crate::codec::Writer;

/// Largest supported modulus: keeps the scaled decoder inside u128.
pub const MAX_MODULUS: u64 = 1 << 56;

const MAX_BASE: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrapdoorError {
    #[error("parameters too small: {0}")]
    ParamsTooSmall(String),
    #[error("decoding failed")]
    DecodingFailure,
    #[error("vector has length {found}, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
}

/// Secret data for inverting `y = A·s + e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GadgetTrapdoor {
    k: usize,
    m: usize,
    q: u64,
    base: u64,
    ell: usize,
    m_bar: usize,
    r: Vec<i8>,
    radius: u64,
}

fn digits_needed(q: u64, base: u64) -> usize {
    let mut ell = 0;
    let mut pow: u128 = 1;
    while pow < q as u128 {
        pow *= base as u128;
        ell += 1;
    }
    ell
}

/// Samples `A ∈ Z_q^{m×k}` together with a gadget trapdoor.
///
/// The gadget base is the smallest power of two for which the gadget block
/// fits while leaving at least `k` rows for `Ā`.
pub fn gen_trap<R: RngCore + ?Sized>(
    k: usize,
    m: usize,
    q: u64,
    rng: &mut R,
) -> Result<(LweMatrix, GadgetTrapdoor), TrapdoorError> {
    if k == 0 {
        return Err(TrapdoorError::ParamsTooSmall("k must be positive".into()));
    }
    if !(3..MAX_MODULUS).contains(&q) {
        return Err(TrapdoorError::ParamsTooSmall(format!("q must lie in [3, 2^56), got {q}")));
    }
    let mut base = 2u64;
    let (ell, m_bar) = loop {
        let ell = digits_needed(q, base);
        if m >= k * ell + k {
            break (ell, m - k * ell);
        }
        if base >= q || base >= MAX_BASE {
            return Err(TrapdoorError::ParamsTooSmall(format!(
                "m = {m} rows cannot hold a gadget for k = {k}, q = {q}"
            )));
        }
        base *= 2;
    };
    let w = k * ell;
    let a_bar = LweMatrix::random(m_bar, k, q, rng);
    let r: Vec<i8> = (0..w * m_bar)
        .map(|_| match rng.gen_range(0..4u8) {
            0 => -1,
            3 => 1,
            _ => 0,
        })
        .collect();
    let mut a = LweMatrix::zeros(m, k, q);
    for i in 0..m_bar {
        for j in 0..k {
            a.set(i, j, a_bar.get(i, j));
        }
    }
    for row in 0..w {
        let (coord, digit) = (row / ell, row % ell);
        for j in 0..k {
            let mut acc: i128 = 0;
            for t in 0..m_bar {
                acc += r[row * m_bar + t] as i128 * a_bar.get(t, j) as i128;
            }
            if j == coord {
                acc += (base as u128).pow(digit as u32) as i128 % q as i128;
            }
            a.set(m_bar + row, j, acc.rem_euclid(q as i128) as u64);
        }
    }
    let max_row_l1 = (0..w)
        .map(|row| r[row * m_bar..(row + 1) * m_bar].iter().map(|v| v.unsigned_abs() as u64).sum::<u64>())
        .max()
        .unwrap_or(0);
    let e_max = q.div_ceil(2 * (base + 1)) - 1;
    let radius = e_max / (1 + max_row_l1);
    if radius == 0 {
        return Err(TrapdoorError::ParamsTooSmall("decoding radius is zero".into()));
    }
    Ok((a, GadgetTrapdoor { k, m, q, base, ell, m_bar, r, radius }))
}

impl GadgetTrapdoor {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn digits(&self) -> usize {
        self.ell
    }

    /// Rows of the uniform block `Ā`.
    pub fn m_bar(&self) -> usize {
        self.m_bar
    }

    /// Certified ∞-norm decoding radius: every `e` with `‖e‖∞ ≤ radius`
    /// decodes correctly.
    pub fn radius(&self) -> u64 {
        self.radius
    }

    /// Trapdoor quality constant implied by the radius:
    /// `radius = q / (C_T·√(k·log₂ q))`.
    pub fn quality_constant(&self) -> f64 {
        let q = self.q as f64;
        q / (self.radius as f64 * (self.k as f64 * q.log2()).sqrt())
    }

    /// Certified lower bound on `λ∞` of the lattice generated by `A` mod q.
    pub fn lambda_inf_lower_bound(&self) -> u64 {
        2 * self.radius + 1
    }

    /// Recovers `(s, e)` with `y = A·s + e` and `‖e‖∞ ≤ radius`.
    pub fn invert(&self, a: &LweMatrix, y: &[u64]) -> Result<(Vec<u64>, Vec<i64>), TrapdoorError> {
        if y.len() != self.m {
            return Err(TrapdoorError::ShapeMismatch { expected: self.m, found: y.len() });
        }
        let q = self.q;
        let (y1, y2) = y.split_at(self.m_bar);
        let w = self.k * self.ell;
        let v: Vec<u64> = (0..w)
            .map(|row| {
                let mut acc: i128 = y2[row] as i128;
                for t in 0..self.m_bar {
                    acc -= self.r[row * self.m_bar + t] as i128 * y1[t] as i128;
                }
                acc.rem_euclid(q as i128) as u64
            })
            .collect();
        let s: Vec<u64> = (0..self.k).map(|i| self.decode_coordinate(&v[i * self.ell..(i + 1) * self.ell])).collect();
        let e_mod = sub_mod(y, &a.mul_vec(&s), q);
        if inf_norm(&e_mod, q) > self.radius {
            return Err(TrapdoorError::DecodingFailure);
        }
        let e = e_mod.iter().map(|&x| center(x, q)).collect();
        Ok((s, e))
    }

    /// Decodes `s` from noisy `v_j ≈ B^j·s mod q`, top digit first. Values are
    /// kept scaled by `B^{ℓ−1}` so every step is exact integer arithmetic.
    fn decode_coordinate(&self, v: &[u64]) -> u64 {
        let q = self.q as u128;
        let b = self.base as u128;
        let scale = b.pow(self.ell as u32 - 1);
        let modulus = q * scale;
        let mut acc = v[self.ell - 1] as u128 * scale;
        for j in (0..self.ell - 1).rev() {
            let target = v[j] as u128 * scale;
            let mut best = (u128::MAX, 0u128);
            for t in 0..b {
                let cand = (acc + t * modulus) / b;
                let diff = cand.abs_diff(target) % modulus;
                let dist = diff.min(modulus - diff);
                if dist < best.0 {
                    best = (dist, cand);
                }
            }
            acc = best.1;
        }
        ((acc + scale / 2) / scale % q) as u64
    }

    /// Serialization used for leak audits; never sent on the wire.
    pub fn encode_into(&self, w: &mut Writer) {
        w.u64(self.k as u64).u64(self.m as u64).u64(self.q).u64(self.base).u64(self.m_bar as u64);
        let packed: Vec<u8> = self.r.iter().map(|&v| v as u8).collect();
        w.bytes(&packed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lwe::matrix::{add_mod, reduce};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn noisy_image(a: &LweMatrix, s: &[u64], e: &[i64]) -> Vec<u64> {
        let q = a.q();
        let e_mod: Vec<u64> = e.iter().map(|&x| reduce(x, q)).collect();
        add_mod(&a.mul_vec(s), &e_mod, q)
    }

    #[test]
    fn toy_example_round_trips() {
        let (a, t) = gen_trap(3, 24, 257, &mut rng(1)).unwrap();
        assert_eq!(t.base(), 4);
        assert_eq!(t.digits(), 5);
        assert!(t.radius() >= 1);
        let mut r = rng(2);
        let radius = t.radius() as i64;
        for _ in 0..1000 {
            let s: Vec<u64> = (0..3).map(|_| r.gen_range(0..257)).collect();
            let e: Vec<i64> = (0..24).map(|_| r.gen_range(-radius..=radius)).collect();
            let (s2, e2) = t.invert(&a, &noisy_image(&a, &s, &e)).unwrap();
            assert_eq!(s2, s);
            assert_eq!(e2, e);
        }
    }

    #[test]
    fn zero_noise_recovers_exactly() {
        let (a, t) = gen_trap(3, 24, 257, &mut rng(3)).unwrap();
        let s = vec![5, 0, 256];
        let (s2, e2) = t.invert(&a, &a.mul_vec(&s)).unwrap();
        assert_eq!(s2, s);
        assert!(e2.iter().all(|&x| x == 0));
    }

    #[test]
    fn half_modulus_error_fails() {
        let (a, t) = gen_trap(3, 24, 257, &mut rng(4)).unwrap();
        let mut e = vec![0i64; 24];
        e[20] = 128;
        let y = noisy_image(&a, &[1, 2, 3], &e);
        assert_eq!(t.invert(&a, &y), Err(TrapdoorError::DecodingFailure));
    }

    #[test]
    fn uniform_targets_fail() {
        let (a, t) = gen_trap(3, 24, 257, &mut rng(5)).unwrap();
        let mut r = rng(6);
        let failures = (0..1000)
            .filter(|_| {
                let y: Vec<u64> = (0..24).map(|_| r.gen_range(0..257)).collect();
                t.invert(&a, &y).is_err()
            })
            .count();
        assert!(failures >= 990, "{failures}");
    }

    #[test]
    fn larger_modulus_round_trips() {
        let q = 1_048_573;
        let (a, t) = gen_trap(3, 72, q, &mut rng(7)).unwrap();
        assert_eq!(t.base(), 2);
        let mut r = rng(8);
        let radius = t.radius() as i64;
        for _ in 0..300 {
            let s: Vec<u64> = (0..3).map(|_| r.gen_range(0..q)).collect();
            let e: Vec<i64> = (0..72).map(|_| r.gen_range(-radius..=radius)).collect();
            assert_eq!(t.invert(&a, &noisy_image(&a, &s, &e)).unwrap().0, s);
        }
    }

    #[test]
    fn too_few_rows_rejected() {
        assert!(matches!(gen_trap(3, 5, 257, &mut rng(9)), Err(TrapdoorError::ParamsTooSmall(_))));
        assert!(matches!(gen_trap(3, 24, 1 << 60, &mut rng(9)), Err(TrapdoorError::ParamsTooSmall(_))));
    }
}
