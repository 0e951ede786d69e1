//! Packed GF(2) vectors and the fixed-width binary encoding of domain points.

use std::fmt;

use rand::RngCore;

use super::AlgebraError;

/// Bit vector packed MSB-first within each byte; pad bits are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    bytes: Vec<u8>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self { len, bytes: vec![0; len.div_ceil(8)] }
    }

    /// Wraps packed bytes, rejecting nonzero padding or a wrong byte count.
    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Result<Self, AlgebraError> {
        if bytes.len() != len.div_ceil(8) {
            return Err(AlgebraError::ShapeMismatch { expected: len.div_ceil(8), found: bytes.len() });
        }
        let s = Self { len, bytes };
        if s.pad_mask() & s.bytes.last().copied().unwrap_or(0) != 0 {
            return Err(AlgebraError::NonZeroPadding);
        }
        Ok(s)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// Parses a string of '0'/'1' characters.
    pub fn parse(text: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = text
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(|b| Self::from_bits(&b))
    }

    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(len);
        rng.fill_bytes(&mut s.bytes);
        if let Some(last) = s.bytes.last_mut() {
            *last &= !s_pad_mask(len);
        }
        s
    }

    /// Uniform over `{0,1}^len \ {0^len}` by rejection.
    pub fn random_nonzero<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        assert!(len > 0, "no nonzero string of length 0");
        loop {
            let s = Self::random(len, rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    fn pad_mask(&self) -> u8 {
        s_pad_mask(self.len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len);
        let mask = 1u8 << (7 - i % 8);
        if v {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bytes.iter().all(|&b| b == 0)
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, AlgebraError> {
        if self.len != other.len {
            return Err(AlgebraError::LengthMismatch { left: self.len, right: other.len });
        }
        let bytes = self.bytes.iter().zip(&other.bytes).map(|(a, b)| a ^ b).collect();
        Ok(BitString { len: self.len, bytes })
    }
}

fn s_pad_mask(len: usize) -> u8 {
    match len % 8 {
        0 => 0,
        r => 0xFFu8 >> r,
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(")?;
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        write!(f, ")")
    }
}

/// Inner product over GF(2): parity of the bitwise AND.
pub fn gf2_dot(d: &BitString, v: &BitString) -> Result<bool, AlgebraError> {
    if d.len != v.len {
        return Err(AlgebraError::LengthMismatch { left: d.len, right: v.len });
    }
    let ones: u32 = d.bytes.iter().zip(&v.bytes).map(|(a, b)| (a & b).count_ones()).sum();
    Ok(ones % 2 == 1)
}

/// Fixed-width big-endian binary encoding of a vector, `width` bits per
/// coordinate. Widths beyond 64 pad each coordinate with leading zeros.
pub fn binary_encode_j(x: &[u64], width: usize) -> Result<BitString, AlgebraError> {
    let mut out = BitString::zeros(x.len() * width);
    for (k, &coord) in x.iter().enumerate() {
        if width < 64 && coord >> width != 0 {
            return Err(AlgebraError::CoordinateTooLarge { index: k, width });
        }
        let base = k * width;
        for bit in 0..width.min(64) {
            if coord >> bit & 1 == 1 {
                out.set(base + width - 1 - bit, true);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`binary_encode_j`].
pub fn binary_decode_j(bits: &BitString, width: usize) -> Result<Vec<u64>, AlgebraError> {
    if width == 0 || bits.len() % width != 0 {
        return Err(AlgebraError::LengthMismatch { left: bits.len(), right: width });
    }
    let n = bits.len() / width;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = 0u64;
        for i in 0..width {
            let bit = bits.get(k * width + i);
            let pos = width - 1 - i;
            if bit {
                if pos >= 64 {
                    return Err(AlgebraError::CoordinateTooLarge { index: k, width });
                }
                v |= 1 << pos;
            }
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn bits(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    fn naive_dot(a: &str, b: &str) -> bool {
        a.chars().zip(b.chars()).filter(|&(x, y)| x == '1' && y == '1').count() % 2 == 1
    }

    #[test]
    fn dot_examples() {
        assert!(gf2_dot(&bits("1010"), &bits("0110")).unwrap());
        assert_eq!(naive_dot("1010", "0110"), true);
        assert!(!gf2_dot(&BitString::zeros(12), &bits("111111111111")).unwrap());
        let v = bits("0110100111");
        for i in 0..10 {
            let mut e = BitString::zeros(10);
            e.set(i, true);
            assert_eq!(gf2_dot(&e, &v).unwrap(), v.get(i));
        }
        assert_eq!(
            gf2_dot(&bits("10"), &bits("101")),
            Err(AlgebraError::LengthMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn encode_examples() {
        assert_eq!(binary_encode_j(&[5], 4).unwrap(), bits("0101"));
        assert!(binary_encode_j(&[0, 0, 0], 16).unwrap().is_zero());
        assert_eq!(
            binary_encode_j(&[16], 4),
            Err(AlgebraError::CoordinateTooLarge { index: 0, width: 4 })
        );
        let wide = binary_encode_j(&[1], 70).unwrap();
        assert_eq!(wide.len(), 70);
        assert!(wide.get(69));
        assert_eq!(binary_decode_j(&wide, 70).unwrap(), vec![1]);
    }

    #[test]
    fn encode_injective_exhaustive() {
        for width in 1..=4usize {
            for n in 1..=2usize {
                let limit = 1u64 << width;
                let mut seen = HashSet::new();
                let total = limit.pow(n as u32);
                for idx in 0..total {
                    let x: Vec<u64> = (0..n).map(|k| idx / limit.pow(k as u32) % limit).collect();
                    let enc = binary_encode_j(&x, width).unwrap();
                    assert_eq!(binary_decode_j(&enc, width).unwrap(), x);
                    assert!(seen.insert(enc));
                }
            }
        }
    }

    #[test]
    fn padding_rejected() {
        assert_eq!(BitString::from_bytes(4, vec![0b1010_0001]), Err(AlgebraError::NonZeroPadding));
        assert!(BitString::from_bytes(4, vec![0b1010_0000]).is_ok());
    }

    proptest! {
        #[test]
        fn dot_is_bilinear(len in 1usize..80, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            let d = BitString::random(len, &mut rng);
            let v = BitString::random(len, &mut rng);
            let w = BitString::random(len, &mut rng);
            let lhs = gf2_dot(&d, &v.xor(&w).unwrap()).unwrap();
            let rhs = gf2_dot(&d, &v).unwrap() ^ gf2_dot(&d, &w).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn encode_round_trip(x in proptest::collection::vec(0u64..(1 << 20), 1..8)) {
            let enc = binary_encode_j(&x, 20).unwrap();
            prop_assert_eq!(binary_decode_j(&enc, 20).unwrap(), x);
        }
    }
}
