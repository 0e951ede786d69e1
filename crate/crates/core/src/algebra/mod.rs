//! Exact arithmetic shared by every family: prime-order groups, `Z_q`
//! matrices and packed GF(2) vectors.

mod bits;
mod group;
mod zq;

use num_bigint::BigUint;
use thiserror::Error;

pub use bits::{binary_decode_j, binary_encode_j, gf2_dot, BitString};
pub use group::{ceil_log2, group_exp_matrix, is_probable_prime, mod_exp, multi_exp, GroupParams};
pub(crate) use group::RngAdapter;
pub use zq::{mod_inverse, zq_pseudo_inverse, zq_rank, ZqMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("invalid group parameters: {0}")]
    InvalidGroup(&'static str),
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("bit length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("coordinate {index} does not fit in {width} bits")]
    CoordinateTooLarge { index: usize, width: usize },
    #[error("nonzero padding bits")]
    NonZeroPadding,
}

/// Matrix of subgroup elements, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigUint>,
}

impl GroupMatrix {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<BigUint>) -> Self {
        assert_eq!(entries.len(), rows * cols, "group matrix shape");
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigUint] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    /// Every entry lies in the order-q subgroup.
    pub fn all_in_group(&self, params: &GroupParams) -> bool {
        self.entries.iter().all(|e| params.contains(e))
    }
}
