//! Dense matrices over `Z_q` for prime `q`, with exact Gaussian elimination.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use super::group::RngAdapter;
use super::AlgebraError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZqMatrix {
    rows: usize,
    cols: usize,
    modulus: BigUint,
    entries: Vec<BigUint>,
}

impl ZqMatrix {
    pub fn zeros(rows: usize, cols: usize, modulus: &BigUint) -> Self {
        Self {
            rows,
            cols,
            modulus: modulus.clone(),
            entries: vec![BigUint::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize, modulus: &BigUint) -> Self {
        let mut m = Self::zeros(n, n, modulus);
        for i in 0..n {
            m.set(i, i, BigUint::one());
        }
        m
    }

    /// Builds a matrix from row-major entries, reducing each modulo q.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        modulus: &BigUint,
        entries: Vec<BigUint>,
    ) -> Result<Self, AlgebraError> {
        if entries.len() != rows * cols {
            return Err(AlgebraError::ShapeMismatch {
                expected: rows * cols,
                found: entries.len(),
            });
        }
        let entries = entries.into_iter().map(|e| e % modulus).collect();
        Ok(Self { rows, cols, modulus: modulus.clone(), entries })
    }

    pub fn from_u64(rows: usize, cols: usize, modulus: u64, entries: &[u64]) -> Result<Self, AlgebraError> {
        Self::from_entries(
            rows,
            cols,
            &BigUint::from(modulus),
            entries.iter().map(|&e| BigUint::from(e)).collect(),
        )
    }

    pub fn random<R: RngCore + ?Sized>(rows: usize, cols: usize, modulus: &BigUint, rng: &mut R) -> Self {
        let mut rng = RngAdapter(rng);
        let entries = (0..rows * cols).map(|_| rng.gen_biguint_below(modulus)).collect();
        Self { rows, cols, modulus: modulus.clone(), entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigUint) {
        self.entries[i * self.cols + j] = v % &self.modulus;
    }

    pub fn row(&self, i: usize) -> &[BigUint] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let v = self.get(i, j);
                    if i == j { v.is_one() } else { v.is_zero() }
                })
            })
    }

    pub fn mul(&self, other: &ZqMatrix) -> Result<ZqMatrix, AlgebraError> {
        if self.cols != other.rows {
            return Err(AlgebraError::ShapeMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = ZqMatrix::zeros(self.rows, other.cols, &self.modulus);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = BigUint::zero();
                for k in 0..self.cols {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.entries[i * other.cols + j] = acc % &self.modulus;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigUint]) -> Result<Vec<BigUint>, AlgebraError> {
        if v.len() != self.cols {
            return Err(AlgebraError::ShapeMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows)
            .map(|i| {
                let acc: BigUint = self.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
                acc % &self.modulus
            })
            .collect())
    }

    /// Reduced row echelon form in place; returns the pivot columns found
    /// among the first `limit` columns.
    fn rref(&mut self, limit: usize) -> Vec<usize> {
        let q = self.modulus.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..limit.min(self.cols) {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.entries.swap(p * self.cols + j, r * self.cols + j);
                }
            }
            let inv = mod_inverse(self.get(r, c), &q).expect("nonzero element of a prime field");
            for j in 0..self.cols {
                let v = self.get(r, j) * &inv % &q;
                self.entries[r * self.cols + j] = v;
            }
            for i in 0..self.rows {
                if i == r || self.get(i, c).is_zero() {
                    continue;
                }
                let factor = self.get(i, c).clone();
                for j in 0..self.cols {
                    let sub = &factor * self.get(r, j) % &q;
                    let cur = self.get(i, j);
                    let v = (cur + &q - sub) % &q;
                    self.entries[i * self.cols + j] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Left inverse of a tall matrix with full column rank: returns `E`
    /// (cols × rows) with `E · A = I`.
    pub fn pseudo_inverse(&self) -> Result<ZqMatrix, AlgebraError> {
        let (rows, cols) = (self.rows, self.cols);
        if rows < cols {
            return Err(AlgebraError::RankDeficient);
        }
        let mut aug = ZqMatrix::zeros(rows, cols + rows, &self.modulus);
        for i in 0..rows {
            for j in 0..cols {
                aug.entries[i * (cols + rows) + j] = self.get(i, j).clone();
            }
            aug.entries[i * (cols + rows) + cols + i] = BigUint::one();
        }
        let pivots = aug.rref(cols);
        if pivots.len() < cols {
            return Err(AlgebraError::RankDeficient);
        }
        let mut out = ZqMatrix::zeros(cols, rows, &self.modulus);
        for i in 0..cols {
            for j in 0..rows {
                out.entries[i * rows + j] = aug.get(i, cols + j).clone();
            }
        }
        Ok(out)
    }

    /// Inverse of a square matrix.
    pub fn inverse(&self) -> Result<ZqMatrix, AlgebraError> {
        if self.rows != self.cols {
            return Err(AlgebraError::ShapeMismatch { expected: self.rows, found: self.cols });
        }
        self.pseudo_inverse()
    }

    /// Some solution `x` of `A·x = y`, or `None` if the system is inconsistent.
    pub fn solve(&self, y: &[BigUint]) -> Result<Option<Vec<BigUint>>, AlgebraError> {
        if y.len() != self.rows {
            return Err(AlgebraError::ShapeMismatch { expected: self.rows, found: y.len() });
        }
        let width = self.cols + 1;
        let mut aug = ZqMatrix::zeros(self.rows, width, &self.modulus);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.entries[i * width + j] = self.get(i, j).clone();
            }
            aug.entries[i * width + self.cols] = &y[i] % &self.modulus;
        }
        let pivots = aug.rref(self.cols);
        for i in pivots.len()..self.rows {
            if !aug.get(i, self.cols).is_zero() {
                return Ok(None);
            }
        }
        let mut x = vec![BigUint::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, self.cols).clone();
        }
        Ok(Some(x))
    }
}

/// Rank over the field `Z_q`.
pub fn zq_rank(a: &ZqMatrix) -> usize {
    let mut m = a.clone();
    m.rref(a.cols).len()
}

/// Left pseudo-inverse of an `(n+1)×n` matrix; see [`ZqMatrix::pseudo_inverse`].
pub fn zq_pseudo_inverse(a: &ZqMatrix) -> Result<ZqMatrix, AlgebraError> {
    a.pseudo_inverse()
}

/// Multiplicative inverse modulo `m`, if it exists.
pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from(a % m);
    let m_int = BigInt::from(m.clone());
    let ext = a.extended_gcd(&m_int);
    if !ext.gcd.is_one() {
        return None;
    }
    let x = ext.x.mod_floor(&m_int);
    x.to_biguint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn q(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(zq_rank(&ZqMatrix::zeros(3, 4, &q(7))), 0);
        assert_eq!(zq_rank(&ZqMatrix::identity(4, &q(7))), 4);
        let m = ZqMatrix::from_u64(2, 2, 5, &[1, 2, 2, 4]).unwrap();
        assert_eq!(zq_rank(&m), 1);
    }

    #[test]
    fn pseudo_inverse_of_stacked_identity() {
        let n = 3;
        let mut a = ZqMatrix::zeros(n + 1, n, &q(11));
        for i in 0..n {
            a.set(i, i, BigUint::one());
        }
        let inv = a.pseudo_inverse().unwrap();
        let mut expected = ZqMatrix::zeros(n, n + 1, &q(11));
        for i in 0..n {
            expected.set(i, i, BigUint::one());
        }
        assert_eq!(inv, expected);
    }

    #[test]
    fn pseudo_inverse_multiplies_back() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 50 {
            let a = ZqMatrix::random(4, 3, &q(101), &mut rng);
            if zq_rank(&a) < 3 {
                assert_eq!(a.pseudo_inverse(), Err(AlgebraError::RankDeficient));
                continue;
            }
            let inv = a.pseudo_inverse().unwrap();
            assert!(inv.mul(&a).unwrap().is_identity());
            checked += 1;
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let a = ZqMatrix::from_u64(3, 2, 7, &[1, 2, 2, 4, 3, 6]).unwrap();
        assert_eq!(a.pseudo_inverse(), Err(AlgebraError::RankDeficient));
        assert_eq!(ZqMatrix::zeros(3, 2, &q(7)).pseudo_inverse(), Err(AlgebraError::RankDeficient));
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let a = ZqMatrix::from_u64(3, 2, 7, &[1, 0, 0, 1, 1, 1]).unwrap();
        let x = a.solve(&[q(2), q(3), q(5)]).unwrap().unwrap();
        assert_eq!(x, vec![q(2), q(3)]);
        assert_eq!(a.solve(&[q(2), q(3), q(6)]).unwrap(), None);
    }

    #[test]
    fn mod_inverse_values() {
        assert_eq!(mod_inverse(&q(3), &q(7)), Some(q(5)));
        assert_eq!(mod_inverse(&q(0), &q(7)), None);
    }
}
