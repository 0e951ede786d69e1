//! Prime-order subgroups of `Z_p^*`.
//!
//! Arithmetic is variable-time. This crate is a protocol test bench, not a
//! hardened implementation.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;

use super::{AlgebraError, GroupMatrix, ZqMatrix};

/// Description of the order-`q` subgroup generated by `g` inside `Z_p^*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupParams {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    // Cached machine-word modulus when p < 2^63, enabling a u128 fast path.
    p_small: Option<u64>,
    q_small: Option<u64>,
}

impl GroupParams {
    /// Validates and builds group parameters.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, AlgebraError> {
        if !is_probable_prime(&p) {
            return Err(AlgebraError::InvalidGroup("p is not prime"));
        }
        if !is_probable_prime(&q) {
            return Err(AlgebraError::InvalidGroup("q is not prime"));
        }
        if !(&p - 1u32).is_multiple_of(&q) {
            return Err(AlgebraError::InvalidGroup("q does not divide p - 1"));
        }
        let g = g % &p;
        if g.is_one() || g.is_zero() {
            return Err(AlgebraError::InvalidGroup("g is trivial"));
        }
        if !g.modpow(&q, &p).is_one() {
            return Err(AlgebraError::InvalidGroup("g does not have order q"));
        }
        Ok(Self::new_unchecked(p, q, g))
    }

    fn new_unchecked(p: BigUint, q: BigUint, g: BigUint) -> Self {
        let p_small = p.to_u64().filter(|v| *v < (1u64 << 63));
        let q_small = q.to_u64();
        Self { p, q, g, p_small, q_small }
    }

    /// Subgroup of quadratic residues modulo the safe prime `p = 2q + 1`,
    /// generated by 4.
    pub fn from_safe_prime_order(q: u64) -> Result<Self, AlgebraError> {
        let q = BigUint::from(q);
        let p = &q * 2u32 + 1u32;
        Self::new(p, q, BigUint::from(4u32))
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    /// Bit length of q, i.e. `⌈log₂ q⌉` for non-powers of two.
    pub fn q_bits(&self) -> usize {
        ceil_log2(&self.q)
    }

    pub fn identity(&self) -> BigUint {
        BigUint::one()
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        match self.p_small {
            Some(p) => {
                let r = (a.to_u64().unwrap_or(0) as u128 * b.to_u64().unwrap_or(0) as u128)
                    % p as u128;
                BigUint::from(r as u64)
            }
            None => (a * b) % &self.p,
        }
    }

    /// `base^exponent mod p`, with the exponent reduced modulo q first.
    pub fn exp(&self, base: &BigUint, exponent: &BigUint) -> BigUint {
        match (self.p_small, self.q_small) {
            (Some(p), Some(q)) => {
                let e = (exponent % q).to_u64().unwrap_or(0);
                let b = (base % p).to_u64().unwrap_or(0);
                BigUint::from(pow_mod_u64(b, e, p))
            }
            _ => base.modpow(&(exponent % &self.q), &self.p),
        }
    }

    /// `g^exponent`.
    pub fn gen_exp(&self, exponent: &BigUint) -> BigUint {
        self.exp(&self.g, exponent)
    }

    pub fn inverse(&self, a: &BigUint) -> BigUint {
        self.exp(a, &(&self.q - 1u32))
    }

    /// Tests membership in the order-q subgroup.
    pub fn contains(&self, a: &BigUint) -> bool {
        !a.is_zero() && a < &self.p && a.modpow(&self.q, &self.p).is_one()
    }

    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        let mut rng = RngAdapter(rng);
        rng.gen_biguint_below(&self.q)
    }

    pub fn random_element<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        let e = self.random_scalar(rng);
        self.gen_exp(&e)
    }
}

/// `base^exponent mod p` in the subgroup described by `params`.
pub fn mod_exp(base: &BigUint, exponent: &BigUint, params: &GroupParams) -> BigUint {
    params.exp(base, exponent)
}

/// Entry-wise `g^A`.
pub fn group_exp_matrix(a: &ZqMatrix, params: &GroupParams) -> GroupMatrix {
    let entries = a.entries().iter().map(|e| params.gen_exp(e)).collect();
    GroupMatrix::from_entries(a.rows(), a.cols(), entries)
}

/// Multi-exponentiation `∏ bases[j]^exps[j]`.
pub fn multi_exp<'a, I>(params: &GroupParams, terms: I) -> BigUint
where
    I: IntoIterator<Item = (&'a BigUint, &'a BigUint)>,
{
    let mut acc = params.identity();
    for (b, e) in terms {
        if e.is_zero() || b.is_one() {
            continue;
        }
        acc = params.mul(&acc, &params.exp(b, e));
    }
    acc
}

pub(crate) fn pow_mod_u64(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut acc: u128 = 1;
    let mut b = (base % m) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Number of bits needed to write `v - 1`, i.e. `⌈log₂ v⌉` for `v ≥ 2`.
pub fn ceil_log2(v: &BigUint) -> usize {
    if *v <= BigUint::one() {
        return 0;
    }
    (v - 1u32).bits() as usize
}

const MR_BASES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Miller-Rabin with the first sixteen prime bases. Deterministic below
/// 3.3·10^24 and a strong probable-prime test above.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in MR_BASES.iter() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'bases: for &a in MR_BASES.iter() {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Lets `num_bigint`'s sampling helpers run on unsized `RngCore` objects.
pub(crate) struct RngAdapter<'a, R: RngCore + ?Sized>(pub &'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}
