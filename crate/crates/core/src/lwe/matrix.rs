//! Machine-word matrices over `Z_q` for the lattice families (q < 2^63).

use rand::{Rng, RngCore};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LweMatrix {
    rows: usize,
    cols: usize,
    q: u64,
    data: Vec<u64>,
}

impl LweMatrix {
    pub fn zeros(rows: usize, cols: usize, q: u64) -> Self {
        Self { rows, cols, q, data: vec![0; rows * cols] }
    }

    /// Row-major entries; each is reduced modulo q.
    pub fn from_rows(rows: usize, cols: usize, q: u64, data: Vec<u64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix shape");
        let data = data.into_iter().map(|v| v % q).collect();
        Self { rows, cols, q, data }
    }

    pub fn random<R: RngCore + ?Sized>(rows: usize, cols: usize, q: u64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(0..q)).collect();
        Self { rows, cols, q, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v % self.q;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `M·x mod q`.
    pub fn mul_vec(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.cols, "vector length");
        let q = self.q as u128;
        (0..self.rows)
            .map(|i| {
                let acc = self
                    .row(i)
                    .iter()
                    .zip(x)
                    .fold(0u128, |acc, (&a, &b)| (acc + a as u128 * (b % self.q) as u128) % q);
                acc as u64
            })
            .collect()
    }

    /// Columns `[start, end)` as a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> LweMatrix {
        let mut out = LweMatrix::zeros(self.rows, end - start, self.q);
        for i in 0..self.rows {
            for j in start..end {
                out.data[i * (end - start) + j - start] = self.get(i, j);
            }
        }
        out
    }

    /// `[self | col]`.
    pub fn append_column(&self, col: &[u64]) -> LweMatrix {
        assert_eq!(col.len(), self.rows, "column length");
        let mut out = LweMatrix::zeros(self.rows, self.cols + 1, self.q);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * (self.cols + 1) + j] = self.get(i, j);
            }
            out.data[i * (self.cols + 1) + self.cols] = col[i] % self.q;
        }
        out
    }
}

/// Representative of `v mod q` in `(-q/2, q/2]`.
pub fn center(v: u64, q: u64) -> i64 {
    let v = v % q;
    if v > q / 2 { v as i64 - q as i64 } else { v as i64 }
}

/// `v mod q` for a signed value.
pub fn reduce(v: i64, q: u64) -> u64 {
    v.rem_euclid(q as i64) as u64
}

/// `a - b mod q`, entrywise.
pub fn sub_mod(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    a.iter().zip(b).map(|(&x, &y)| ((x % q) + q - (y % q)) % q).collect()
}

/// `a + b mod q`, entrywise.
pub fn add_mod(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    a.iter().zip(b).map(|(&x, &y)| ((x % q) as u128 + (y % q) as u128) as u64 % q).collect()
}

/// Infinity norm of the centered representative.
pub fn inf_norm(v: &[u64], q: u64) -> u64 {
    v.iter().map(|&x| center(x, q).unsigned_abs()).max().unwrap_or(0)
}
