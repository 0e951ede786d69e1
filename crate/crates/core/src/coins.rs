//! Replayable randomness.
//!
//! Provers consume a [`CoinTape`]; every byte handed out is recorded so an
//! extractor can be given "the same random coins" afterwards as a
//! [`RecordedCoins`] value.

use num_bigint::BigUint;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type Seed = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoinError {
    #[error("coin tape exhausted after {consumed} bytes")]
    TapeExhausted { consumed: usize },
}

/// Derives an independent child seed from `(root, label, index)`.
pub fn derive_seed(root: &Seed, label: &str, index: u64) -> Seed {
    let mut h = Sha256::new();
    h.update(b"poqka/seed/v1");
    h.update(root);
    h.update((label.len() as u64).to_be_bytes());
    h.update(label.as_bytes());
    h.update(index.to_be_bytes());
    h.finalize().into()
}

/// Deterministic RNG for `(root, label, index)`.
pub fn derived_rng(root: &Seed, label: &str, index: u64) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(derive_seed(root, label, index))
}

pub fn seed_from_hex(text: &str) -> Result<Seed, String> {
    let bytes = hex::decode(text.trim()).map_err(|e| e.to_string())?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| format!("seed must be 32 bytes, got {}", b.len()))
}

/// A fallible byte source. Live tapes never run out; recorded prefixes do.
pub trait CoinSource {
    fn read(&mut self, buf: &mut [u8]) -> Result<(), CoinError>;

    fn draw_bit(&mut self) -> Result<u8, CoinError> {
        let mut b = [0u8; 1];
        self.read(&mut b)?;
        Ok(b[0] & 1)
    }

    /// Uniform in `[0, bound)` by masked rejection. `bound` must be positive.
    fn draw_below(&mut self, bound: u64) -> Result<u64, CoinError> {
        assert!(bound > 0, "empty range");
        if bound == 1 {
            return Ok(0);
        }
        let bits = 64 - (bound - 1).leading_zeros();
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        let nbytes = bits.div_ceil(8) as usize;
        loop {
            let mut buf = [0u8; 8];
            self.read(&mut buf[8 - nbytes..])?;
            let v = u64::from_be_bytes(buf) & mask;
            if v < bound {
                return Ok(v);
            }
        }
    }

    /// Uniform in `[low, high)`.
    fn draw_range(&mut self, low: u64, high: u64) -> Result<u64, CoinError> {
        Ok(low + self.draw_below(high - low)?)
    }

    /// Uniform big integer in `[0, bound)`.
    fn draw_below_big(&mut self, bound: &BigUint) -> Result<BigUint, CoinError> {
        assert!(*bound > BigUint::from(0u32), "empty range");
        let bits = (bound - 1u32).bits();
        if bits == 0 {
            return Ok(BigUint::from(0u32));
        }
        let nbytes = bits.div_ceil(8) as usize;
        let excess = nbytes as u64 * 8 - bits;
        loop {
            let mut buf = vec![0u8; nbytes];
            self.read(&mut buf)?;
            buf[0] &= 0xFF >> excess;
            let v = BigUint::from_bytes_be(&buf);
            if &v < bound {
                return Ok(v);
            }
        }
    }
}

/// Seeded, recording randomness stream (ChaCha20 keystream).
#[derive(Clone, Debug)]
pub struct CoinTape {
    seed: Seed,
    rng: ChaCha20Rng,
    consumed: Vec<u8>,
}

impl CoinTape {
    pub fn new(seed: Seed) -> Self {
        Self { seed, rng: ChaCha20Rng::from_seed(seed), consumed: Vec::new() }
    }

    pub fn derived(root: &Seed, label: &str, index: u64) -> Self {
        Self::new(derive_seed(root, label, index))
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    /// Number of bytes handed out so far.
    pub fn cursor(&self) -> usize {
        self.consumed.len()
    }

    /// The consumed prefix, replayable by an extractor.
    pub fn recorded(&self) -> RecordedCoins {
        RecordedCoins::new(self.consumed.clone())
    }

    /// Independent stream derived from this tape's seed. Does not advance or
    /// record anything on `self`.
    pub fn fork(&self, label: &str) -> ChaCha20Rng {
        derived_rng(&self.seed, label, 0)
    }
}

impl CoinSource for CoinTape {
    fn read(&mut self, buf: &mut [u8]) -> Result<(), CoinError> {
        self.fill_bytes(buf);
        Ok(())
    }
}

impl RngCore for CoinTape {
    fn next_u32(&mut self) -> u32 {
        let mut b = [0u8; 4];
        self.fill_bytes(&mut b);
        u32::from_le_bytes(b)
    }

    fn next_u64(&mut self) -> u64 {
        let mut b = [0u8; 8];
        self.fill_bytes(&mut b);
        u64::from_le_bytes(b)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest);
        self.consumed.extend_from_slice(dest);
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// A finite recorded coin prefix with its own read cursor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordedCoins {
    bytes: Vec<u8>,
    pos: usize,
}

impl RecordedCoins {
    pub fn new(bytes: Vec<u8>) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

impl CoinSource for RecordedCoins {
    fn read(&mut self, buf: &mut [u8]) -> Result<(), CoinError> {
        if self.remaining() < buf.len() {
            return Err(CoinError::TapeExhausted { consumed: self.pos });
        }
        buf.copy_from_slice(&self.bytes[self.pos..self.pos + buf.len()]);
        self.pos += buf.len();
        Ok(())
    }
}
