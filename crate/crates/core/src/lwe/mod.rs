//! LWE-based families: the noisy claw-free family F and the trapdoor
//! injective family G.
//!
//! Both keys are `m×(n+1)` matrices `K` and share one branch formula,
//! `y = K·(x‖b) + e` with `e` drawn coordinate-wise from the prover noise
//! `D_{B_P}`:
//!
//! * F: `K = [A | v]`, `v = A·s + e₀`, `s ∈ {0,1}^n`, `e₀ ← D_{B_V}`; the
//!   claw partner of `(0, x)` is `(1, x − s mod q)`.
//! * G: `K` comes straight from [`gen_trap`] with width `n+1`.

mod gadget;
mod matrix;
mod noise;

use rand::{Rng, RngCore};
use thiserror::Error;

pub use gadget::{gen_trap, GadgetTrapdoor, TrapdoorError, MAX_MODULUS};
pub use matrix::{add_mod, center, inf_norm, reduce, sub_mod, LweMatrix};
pub use noise::{NoiseDistribution, NoiseKind};

use crate::codec::{CodecError, Reader, Writer};
use crate::profile::ProfileKind;
use crate::stats::{Density, StatsError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LweError {
    #[error("invalid LWE parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Trapdoor(#[from] TrapdoorError),
    #[error("preimage lies outside {{0,1}} × X")]
    NotInRestrictedRange,
    #[error("vector has length {found}, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Public parameters of the LWE pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LweParams {
    n: usize,
    m: usize,
    q: u64,
    b_p: u64,
    b_v: u64,
    b_l: u64,
    c_t: f64,
    noise: NoiseKind,
    profile: ProfileKind,
}

impl LweParams {
    /// Parameters with explicitly chosen bounds.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        m: usize,
        q: u64,
        b_p: u64,
        b_v: u64,
        b_l: u64,
        c_t: f64,
        noise: NoiseKind,
        profile: ProfileKind,
    ) -> Result<Self, LweError> {
        if n == 0 || m <= n {
            return Err(LweError::InvalidParams("need 0 < n < m".into()));
        }
        if !(3..MAX_MODULUS).contains(&q) {
            return Err(LweError::InvalidParams(format!("q must lie in [3, 2^56), got {q}")));
        }
        if b_p < 2 {
            return Err(LweError::InvalidParams("B_P must be at least 2".into()));
        }
        let p = Self { n, m, q, b_p, b_v, b_l, c_t, noise, profile };
        if profile == ProfileKind::PaperFaithful && b_p != p.paper_b_p() {
            return Err(LweError::InvalidParams(format!(
                "paper-faithful profile needs B_P = q/(2·C_T·m·√((n+1)·log q)) = {}",
                p.paper_b_p()
            )));
        }
        Ok(p)
    }

    /// Sets `B_P` from the trapdoor constant: `q / (2·C_T·m·√((n+1)·log₂ q))`.
    pub fn paper_faithful(n: usize, m: usize, q: u64, c_t: f64, b_v: u64, b_l: u64) -> Result<Self, LweError> {
        let probe = Self { n, m, q, b_p: 0, b_v, b_l, c_t, noise: NoiseKind::TruncatedGaussian, profile: ProfileKind::PaperFaithful };
        let b_p = probe.paper_b_p();
        Self::new(n, m, q, b_p, b_v, b_l, c_t, NoiseKind::TruncatedGaussian, ProfileKind::PaperFaithful)
    }

    fn paper_b_p(&self) -> u64 {
        let qf = self.q as f64;
        let denom = 2.0 * self.c_t * self.m as f64 * ((self.n as f64 + 1.0) * qf.log2()).sqrt();
        (qf / denom).floor() as u64
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn b_p(&self) -> u64 {
        self.b_p
    }

    pub fn b_v(&self) -> u64 {
        self.b_v
    }

    pub fn b_l(&self) -> u64 {
        self.b_l
    }

    pub fn c_t(&self) -> f64 {
        self.c_t
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise
    }

    pub fn profile(&self) -> ProfileKind {
        self.profile
    }

    /// Bits per coordinate in the encoding `J`: `⌈log₂ q⌉`.
    pub fn width(&self) -> usize {
        64 - (self.q - 1).leading_zeros() as usize
    }

    /// Length of the equation string.
    pub fn w(&self) -> usize {
        self.n * self.width()
    }

    pub fn prover_noise(&self) -> NoiseDistribution {
        NoiseDistribution::new(self.b_p, self.noise)
    }

    pub fn verifier_noise(&self) -> NoiseDistribution {
        NoiseDistribution::new(self.b_v, self.noise)
    }

    /// `B_V / B_P` and `B_L / B_V`.
    pub fn ratios(&self) -> (f64, f64) {
        (self.b_v as f64 / self.b_p as f64, self.b_l as f64 / self.b_v.max(1) as f64)
    }

    pub fn random_point<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        (0..self.n).map(|_| rng.gen_range(0..self.q)).collect()
    }

    pub fn in_domain(&self, x: &[u64]) -> bool {
        x.len() == self.n && x.iter().all(|&v| v < self.q)
    }
}

/// Calibrates `C_T` by sampling one trapdoor and reading off its radius.
pub fn calibrate_c_t<R: RngCore + ?Sized>(n: usize, m: usize, q: u64, rng: &mut R) -> Result<f64, LweError> {
    let (_, t) = gen_trap(n + 1, m, q, rng)?;
    Ok(t.quality_constant())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LweFamily {
    F,
    G,
}

impl LweFamily {
    pub fn key_tag(self) -> u8 {
        match self {
            LweFamily::F => 0x11,
            LweFamily::G => 0x12,
        }
    }

    pub fn trapdoor_tag(self) -> u8 {
        self.key_tag() | 0x80
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LweKey {
    family: LweFamily,
    params: LweParams,
    matrix: LweMatrix,
}

impl LweKey {
    pub fn family(&self) -> LweFamily {
        self.family
    }

    pub fn params(&self) -> &LweParams {
        &self.params
    }

    /// The `m×(n+1)` key matrix.
    pub fn matrix(&self) -> &LweMatrix {
        &self.matrix
    }

    /// Noise-free center `K·(x‖b) mod q`.
    pub fn center_of(&self, b: u64, x: &[u64]) -> Result<Vec<u64>, LweError> {
        if x.len() != self.params.n {
            return Err(LweError::ShapeMismatch { expected: self.params.n, found: x.len() });
        }
        let mut v = x.to_vec();
        v.push(b);
        Ok(self.matrix.mul_vec(&v))
    }

    /// `K·(x‖b) + e` for an explicit noise vector.
    pub fn eval_with_noise(&self, b: u64, x: &[u64], e: &[i64]) -> Result<Vec<u64>, LweError> {
        let q = self.params.q;
        let c = self.center_of(b, x)?;
        if e.len() != c.len() {
            return Err(LweError::ShapeMismatch { expected: c.len(), found: e.len() });
        }
        Ok(c.iter().zip(e).map(|(&ci, &ei)| (ci as i128 + ei as i128).rem_euclid(q as i128) as u64).collect())
    }

    /// Samples `K·(x‖b) + e`, `e ← D_{B_P}^m`.
    pub fn eval<R: RngCore + ?Sized>(&self, b: u64, x: &[u64], rng: &mut R) -> Result<Vec<u64>, LweError> {
        let e = self.params.prover_noise().sample_vec(self.params.m, rng);
        self.eval_with_noise(b, x, &e)
    }

    pub fn encode(&self) -> Vec<u8> {
        self.encode_with_tag(self.family.key_tag())
    }

    pub fn encode_with_tag(&self, tag: u8) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(tag).u64(self.params.n as u64).u64(self.params.m as u64).u64(self.params.q);
        for &e in self.matrix.data() {
            w.u64(e);
        }
        w.finish()
    }

    /// Decodes a key under known parameters; tag 0x00 takes `fallback`.
    pub fn decode(bytes: &[u8], params: &LweParams, fallback: LweFamily) -> Result<Self, LweError> {
        let mut r = Reader::new(bytes);
        let family = match r.u8()? {
            0x00 => fallback,
            0x11 => LweFamily::F,
            0x12 => LweFamily::G,
            _ => return Err(CodecError::Invalid("unknown LWE key tag").into()),
        };
        let (n, m, q) = (r.u64()? as usize, r.u64()? as usize, r.u64()?);
        if n != params.n || m != params.m || q != params.q {
            return Err(LweError::InvalidParams("key does not match the session parameters".into()));
        }
        let mut data = Vec::with_capacity(m * (n + 1));
        for _ in 0..m * (n + 1) {
            let v = r.u64()?;
            if v >= q {
                return Err(CodecError::Invalid("key entry not reduced mod q").into());
            }
            data.push(v);
        }
        r.finish()?;
        Ok(Self { family, params: params.clone(), matrix: LweMatrix::from_rows(m, n + 1, q, data) })
    }
}

/// F trapdoor: the gadget trapdoor for `A` plus the planted `s` and `e₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct LweTrapF {
    params: LweParams,
    a: LweMatrix,
    v: Vec<u64>,
    gadget: GadgetTrapdoor,
    s: Vec<u8>,
    e0: Vec<i64>,
}

/// G trapdoor: the gadget trapdoor for the full key.
#[derive(Clone, Debug, PartialEq)]
pub struct LweTrapG {
    params: LweParams,
    a: LweMatrix,
    gadget: GadgetTrapdoor,
}

impl LweTrapF {
    pub fn params(&self) -> &LweParams {
        &self.params
    }

    pub fn s(&self) -> &[u8] {
        &self.s
    }

    pub fn e0(&self) -> &[i64] {
        &self.e0
    }

    pub fn v(&self) -> &[u64] {
        &self.v
    }

    pub fn gadget(&self) -> &GadgetTrapdoor {
        &self.gadget
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(LweFamily::F.trapdoor_tag());
        self.gadget.encode_into(&mut w);
        w.bytes(&self.s);
        for &e in &self.e0 {
            w.u64(e as u64);
        }
        w.finish()
    }
}

impl LweTrapG {
    pub fn params(&self) -> &LweParams {
        &self.params
    }

    pub fn gadget(&self) -> &GadgetTrapdoor {
        &self.gadget
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(LweFamily::G.trapdoor_tag());
        self.gadget.encode_into(&mut w);
        w.finish()
    }
}

pub fn gen_f_lwe<R: RngCore + ?Sized>(params: &LweParams, rng: &mut R) -> Result<(LweKey, LweTrapF), LweError> {
    let (a, gadget) = gen_trap(params.n, params.m, params.q, rng)?;
    let s: Vec<u8> = (0..params.n).map(|_| rng.gen_range(0..2u8)).collect();
    let e0 = params.verifier_noise().sample_vec(params.m, rng);
    let s_wide: Vec<u64> = s.iter().map(|&v| v as u64).collect();
    let v: Vec<u64> = a
        .mul_vec(&s_wide)
        .iter()
        .zip(&e0)
        .map(|(&c, &e)| (c as i128 + e as i128).rem_euclid(params.q as i128) as u64)
        .collect();
    let key = LweKey { family: LweFamily::F, params: params.clone(), matrix: a.append_column(&v) };
    Ok((key, LweTrapF { params: params.clone(), a, v, gadget, s, e0 }))
}

pub fn gen_g_lwe<R: RngCore + ?Sized>(params: &LweParams, rng: &mut R) -> Result<(LweKey, LweTrapG), LweError> {
    let (a, gadget) = gen_trap(params.n + 1, params.m, params.q, rng)?;
    let key = LweKey { family: LweFamily::G, params: params.clone(), matrix: a.clone() };
    Ok((key, LweTrapG { params: params.clone(), a, gadget }))
}

/// Samples `y ← f'_{k,b}(x)`.
pub fn eval_f_lwe<R: RngCore + ?Sized>(key: &LweKey, b: u8, x: &[u64], rng: &mut R) -> Result<Vec<u64>, LweError> {
    key.eval(b as u64, x, rng)
}

/// Samples `y ← g_{k,b}(x)`.
pub fn eval_g_lwe<R: RngCore + ?Sized>(key: &LweKey, b: u64, x: &[u64], rng: &mut R) -> Result<Vec<u64>, LweError> {
    key.eval(b, x, rng)
}

/// Exact probability of `y` under `f'_{k,b}(x)` (or `g_{k,b}(x)`).
pub fn density_f_lwe(key: &LweKey, b: u64, x: &[u64], y: &[u64]) -> Result<f64, LweError> {
    let q = key.params.q;
    let c = key.center_of(b, x)?;
    if y.len() != c.len() {
        return Err(LweError::ShapeMismatch { expected: c.len(), found: y.len() });
    }
    let noise = key.params.prover_noise();
    let e: Vec<i64> = sub_mod(y, &c, q).iter().map(|&v| center(v, q)).collect();
    Ok(noise.vector_mass(&e))
}

/// `‖y − K·(x‖b)‖∞ ≤ B_P`.
pub fn chk_lwe(key: &LweKey, b: u64, x: &[u64], y: &[u64]) -> bool {
    let q = key.params.q;
    if y.len() != key.params.m || y.iter().any(|&v| v >= q) || !key.params.in_domain(x) {
        return false;
    }
    match key.center_of(b, x) {
        Ok(c) => inf_norm(&sub_mod(y, &c, q), q) <= key.params.b_p,
        Err(_) => false,
    }
}

/// `x` with `y ∈ supp f'_{k,b}(x)`, via `Invert(y − b·v)`.
pub fn inv_f_lwe(trap: &LweTrapF, b: u8, y: &[u64]) -> Result<Vec<u64>, LweError> {
    let q = trap.params.q;
    if y.len() != trap.params.m {
        return Err(LweError::ShapeMismatch { expected: trap.params.m, found: y.len() });
    }
    if b > 1 {
        return Err(LweError::NotInRestrictedRange);
    }
    let shifted = if b == 1 { sub_mod(y, &trap.v, q) } else { y.to_vec() };
    let (x, _) = trap.gadget.invert(&trap.a, &shifted)?;
    Ok(x)
}

/// `(b, x)` with `y ∈ supp g_{k,b}(x)` and `b ∈ {0,1}`.
pub fn inv_g_lwe(trap: &LweTrapG, y: &[u64]) -> Result<(u8, Vec<u64>), LweError> {
    if y.len() != trap.params.m {
        return Err(LweError::ShapeMismatch { expected: trap.params.m, found: y.len() });
    }
    let (mut s, _) = trap.gadget.invert(&trap.a, y)?;
    let b = s.pop().expect("width n+1");
    if b > 1 {
        return Err(LweError::NotInRestrictedRange);
    }
    Ok((b as u8, s))
}

/// `(b⊕1, x − (−1)^b·s mod q)`.
pub fn claw_partner_lwe(trap: &LweTrapF, b: u8, x: &[u64]) -> (u8, Vec<u64>) {
    let q = trap.params.q;
    let partner = x
        .iter()
        .zip(&trap.s)
        .map(|(&xi, &si)| if b == 0 { (xi + q - si as u64) % q } else { (xi + si as u64) % q })
        .collect();
    (b ^ 1, partner)
}

/// Whether `x1 = x0 − s mod q`.
pub fn is_claw_lwe(trap: &LweTrapF, x0: &[u64], x1: &[u64]) -> bool {
    x0.len() == trap.s.len() && claw_partner_lwe(trap, 0, x0).1 == x1
}

/// Whether `√m·B_P ≤ ¼·(2r/√m)`, i.e. `2·m·B_P ≤ r`, using the trapdoor's
/// certified radius `r` as the λ∞ proxy.
pub fn extractability_bound_holds(params: &LweParams, trap: &GadgetTrapdoor) -> bool {
    2 * params.m as u128 * params.b_p as u128 <= trap.radius() as u128
}

/// `1 − Σ √(D0(x)·D1(x))`.
pub fn hellinger<K: Ord + Clone>(d0: &Density<K>, d1: &Density<K>) -> Result<f64, StatsError> {
    d0.check_normalized()?;
    d1.check_normalized()?;
    let overlap: f64 = d0.iter().map(|(k, p0)| (p0 * d1.mass(k)).sqrt()).sum();
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}

/// `E_{e₀}[H²(D_{B_P}, D_{B_P} + e₀)]` with `e₀ ← D_{B_V}`: the expected
/// squared Hellinger distance between the b = 1 branches of the noiseless
/// and noisy F functions, one coordinate.
pub fn expected_branch_hellinger(b_p: u64, b_v: u64, kind: NoiseKind) -> f64 {
    let prover = NoiseDistribution::new(b_p, kind);
    let verifier = NoiseDistribution::new(b_v, kind);
    let base = Density::from_masses(prover.table());
    verifier
        .table()
        .iter()
        .map(|&(shift, weight)| {
            let shifted = Density::from_masses(prover.table().into_iter().map(|(x, p)| (x + shift, p)));
            weight * hellinger(&base, &shifted).expect("noise tables are normalized")
        })
        .sum()
}
