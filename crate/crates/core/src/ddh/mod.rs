//! DDH-based function families over `X = Z_d^n`.
//!
//! All three families share one key shape, an `(n+1)×(n+1)` grid of group
//! elements `K`, and one evaluation rule:
//!
//! ```text
//! y_i = K[i][n]^b · ∏_j K[i][j]^{x_j}
//! ```
//!
//! * F (claw-free): `K = [g^A | g^{As}]`, so `f_{k,b}(x) = g^{A(x + b·s)}`.
//! * G (injective): `K = g^Ã` with `Ã` uniform square.
//! * H (weak extension): `K = g^{(1;u)·vᵀ}`, every row a power of the first.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::algebra::{
    group_exp_matrix, multi_exp, AlgebraError, GroupMatrix, GroupParams, RngAdapter, ZqMatrix,
};
use crate::codec::{CodecError, Reader, Writer};
use crate::profile::ProfileKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DdhError {
    #[error("invalid DDH parameters: {0}")]
    InvalidParams(String),
    #[error("domain point outside X = Z_d^n")]
    DomainViolation,
    #[error("matrix is rank deficient")]
    RankDeficient,
    #[error("no preimage in the restricted range")]
    NotInRange,
    #[error("preimage lies outside {{0,1}} × X")]
    NotInRestrictedRange,
    #[error("vector has length {found}, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("trapdoor belongs to a different family")]
    WrongFamily,
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl From<AlgebraError> for DdhError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::RankDeficient => DdhError::RankDeficient,
            other => DdhError::InvalidParams(other.to_string()),
        }
    }
}

/// Public parameters of the DDH tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DdhParams {
    group: GroupParams,
    n: usize,
    d: u64,
    profile: ProfileKind,
}

impl DdhParams {
    pub fn new(group: GroupParams, n: usize, d: u64, profile: ProfileKind) -> Result<Self, DdhError> {
        if n == 0 {
            return Err(DdhError::InvalidParams("n must be positive".into()));
        }
        if d < 3 {
            return Err(DdhError::InvalidParams("d must be at least 3".into()));
        }
        if BigUint::from(d) > *group.q() {
            return Err(DdhError::InvalidParams("d must not exceed q".into()));
        }
        if profile == ProfileKind::PaperFaithful {
            let expected_n = 121 * group.q_bits();
            if n != expected_n {
                return Err(DdhError::InvalidParams(format!(
                    "paper-faithful profile needs n = 121·⌈log q⌉ = {expected_n}, got {n}"
                )));
            }
            if d != (n as u64) * (n as u64) {
                return Err(DdhError::InvalidParams("paper-faithful profile needs d = n²".into()));
            }
        }
        Ok(Self { group, n, d, profile })
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn profile(&self) -> ProfileKind {
        self.profile
    }

    /// Bits per coordinate in the encoding `J`.
    pub fn width(&self) -> usize {
        self.group.q_bits()
    }

    /// Length of the equation string `d`.
    pub fn w(&self) -> usize {
        self.n * self.width()
    }

    /// `(1 - 2/d)^n`, the mass of `X_0 ∩ X_1` inside `X`.
    pub fn overlap_fraction(&self) -> f64 {
        (1.0 - 2.0 / self.d as f64).powi(self.n as i32)
    }

    /// Membership of `x` in `X = Z_d^n`.
    pub fn in_domain(&self, x: &[u64]) -> bool {
        x.len() == self.n && x.iter().all(|&v| v < self.d)
    }

    /// Uniform `x ∈ X`.
    pub fn random_point<R: RngCore + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        (0..self.n).map(|_| rng.gen_range(0..self.d)).collect()
    }
}

/// `X_0 = {1,…,d−1}^n`, `X_1 = {0,…,d−2}^n`.
pub fn in_xb(params: &DdhParams, b: u8, x: &[u64]) -> bool {
    if !params.in_domain(x) {
        return false;
    }
    match b {
        0 => x.iter().all(|&v| v >= 1),
        1 => x.iter().all(|&v| v + 2 <= params.d),
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DdhFamily {
    F,
    G,
    H,
}

impl DdhFamily {
    pub fn key_tag(self) -> u8 {
        match self {
            DdhFamily::F => 0x01,
            DdhFamily::G => 0x02,
            DdhFamily::H => 0x03,
        }
    }

    pub fn trapdoor_tag(self) -> u8 {
        self.key_tag() | 0x80
    }

    fn from_key_tag(tag: u8) -> Option<Self> {
        match tag {
            0x01 => Some(DdhFamily::F),
            0x02 => Some(DdhFamily::G),
            0x03 => Some(DdhFamily::H),
            _ => None,
        }
    }
}

/// Public key of any of the three families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DdhKey {
    family: DdhFamily,
    params: DdhParams,
    grid: GroupMatrix,
}

impl DdhKey {
    pub fn family(&self) -> DdhFamily {
        self.family
    }

    pub fn params(&self) -> &DdhParams {
        &self.params
    }

    /// The `(n+1)×(n+1)` entry grid.
    pub fn grid(&self) -> &GroupMatrix {
        &self.grid
    }

    /// Image of an extended-domain point `(b, x) ∈ Z_q × Z_q^n`.
    pub fn eval(&self, b: &BigUint, x: &[BigUint]) -> Result<Vec<BigUint>, DdhError> {
        let n = self.params.n;
        if x.len() != n {
            return Err(DdhError::ShapeMismatch { expected: n, found: x.len() });
        }
        let group = &self.params.group;
        Ok((0..=n)
            .map(|i| {
                let row = self.grid.row(i);
                multi_exp(group, row[..n].iter().zip(x).chain(std::iter::once((&row[n], b))))
            })
            .collect())
    }

    /// Image of a restricted-domain point `(b, x) ∈ {0,1} × X`.
    pub fn eval_restricted(&self, b: u8, x: &[u64]) -> Result<Vec<BigUint>, DdhError> {
        if b > 1 || !self.params.in_domain(x) {
            return Err(DdhError::DomainViolation);
        }
        let xb: Vec<BigUint> = x.iter().map(|&v| BigUint::from(v)).collect();
        self.eval(&BigUint::from(b), &xb)
    }

    pub fn encode(&self) -> Vec<u8> {
        self.encode_with_tag(self.family.key_tag())
    }

    /// Encoding with the family tag replaced, e.g. by 0x00 on the wire.
    pub fn encode_with_tag(&self, tag: u8) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(tag).u32(self.params.n as u32);
        write_group(&mut w, &self.params.group);
        for e in self.grid.entries() {
            w.big(e);
        }
        w.finish()
    }

    /// Decodes a key under known public parameters. A tag of 0x00 (family
    /// concealed) decodes with `fallback` as the family.
    pub fn decode(bytes: &[u8], params: &DdhParams, fallback: DdhFamily) -> Result<Self, DdhError> {
        let mut r = Reader::new(bytes);
        let tag = r.u8()?;
        let family = match tag {
            0x00 => fallback,
            t => DdhFamily::from_key_tag(t).ok_or(CodecError::Invalid("unknown DDH key tag"))?,
        };
        let n = r.u32()? as usize;
        let group = read_group(&mut r)?;
        if n != params.n || group != params.group {
            return Err(DdhError::InvalidParams("key does not match the session parameters".into()));
        }
        let mut entries = Vec::with_capacity((n + 1) * (n + 1));
        for _ in 0..(n + 1) * (n + 1) {
            let e = r.big()?;
            if !params.group.contains(&e) {
                return Err(CodecError::Invalid("key entry outside the group").into());
            }
            entries.push(e);
        }
        r.finish()?;
        Ok(Self { family, params: params.clone(), grid: GroupMatrix::from_entries(n + 1, n + 1, entries) })
    }
}

fn write_group(w: &mut Writer, g: &GroupParams) {
    w.big(g.p()).big(g.q()).big(g.g());
}

fn read_group(r: &mut Reader<'_>) -> Result<GroupParams, DdhError> {
    let p = r.big()?;
    let q = r.big()?;
    let g = r.big()?;
    GroupParams::new(p, q, g).map_err(|e| DdhError::InvalidParams(e.to_string()))
}

/// Table `g^i ↦ i` for `i ∈ [0, d)`.
#[derive(Debug)]
struct DlogTable(HashMap<BigUint, u64>);

impl DlogTable {
    fn build(params: &DdhParams) -> Self {
        let group = &params.group;
        let mut map = HashMap::with_capacity(params.d as usize);
        let mut acc = BigUint::one();
        for i in 0..params.d {
            map.insert(acc.clone(), i);
            acc = group.mul(&acc, group.g());
        }
        DlogTable(map)
    }

    fn lookup(&self, y: &BigUint) -> Option<u64> {
        self.0.get(y).copied()
    }
}

/// Lazily built inversion helpers shared by the F and G trapdoors.
#[derive(Debug, Default)]
struct InversionCache {
    inverse: OnceLock<Result<ZqMatrix, DdhError>>,
    dlog: OnceLock<DlogTable>,
}

/// Trapdoor `(g, A, s)` for F.
#[derive(Clone, Debug)]
pub struct DdhTrapF {
    params: DdhParams,
    a: ZqMatrix,
    s: Vec<u8>,
    cache: Arc<InversionCache>,
}

/// Trapdoor `(g, Ã)` for G.
#[derive(Clone, Debug)]
pub struct DdhTrapG {
    params: DdhParams,
    a_tilde: ZqMatrix,
    cache: Arc<InversionCache>,
}

/// Trapdoor `(g, u)` for H.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DdhTrapH {
    params: DdhParams,
    u: Vec<BigUint>,
}

impl DdhTrapF {
    /// Builds a trapdoor (and its key) from explicit exponents.
    pub fn from_parts(params: &DdhParams, a: ZqMatrix, s: Vec<u8>) -> Result<(DdhKey, Self), DdhError> {
        let n = params.n;
        if a.rows() != n + 1 || a.cols() != n || s.len() != n || s.iter().any(|&v| v > 1) {
            return Err(DdhError::InvalidParams("F trapdoor shape".into()));
        }
        let group = &params.group;
        let ga = group_exp_matrix(&a, group);
        let s_big: Vec<BigUint> = s.iter().map(|&v| BigUint::from(v)).collect();
        let a_s = a.mul_vec(&s_big)?;
        let mut entries = Vec::with_capacity((n + 1) * (n + 1));
        for i in 0..=n {
            entries.extend_from_slice(ga.row(i));
            entries.push(group.gen_exp(&a_s[i]));
        }
        let key = DdhKey {
            family: DdhFamily::F,
            params: params.clone(),
            grid: GroupMatrix::from_entries(n + 1, n + 1, entries),
        };
        let trap = Self { params: params.clone(), a, s, cache: Arc::default() };
        Ok((key, trap))
    }

    pub fn params(&self) -> &DdhParams {
        &self.params
    }

    pub fn a(&self) -> &ZqMatrix {
        &self.a
    }

    pub fn s(&self) -> &[u8] {
        &self.s
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(DdhFamily::F.trapdoor_tag()).u32(self.params.n as u32);
        write_group(&mut w, &self.params.group);
        for e in self.a.entries() {
            w.big(e);
        }
        w.raw(&self.s);
        w.finish()
    }
}

impl DdhTrapG {
    pub fn from_parts(params: &DdhParams, a_tilde: ZqMatrix) -> Result<(DdhKey, Self), DdhError> {
        let n = params.n;
        if a_tilde.rows() != n + 1 || a_tilde.cols() != n + 1 {
            return Err(DdhError::InvalidParams("G trapdoor shape".into()));
        }
        let key = DdhKey {
            family: DdhFamily::G,
            params: params.clone(),
            grid: group_exp_matrix(&a_tilde, &params.group),
        };
        Ok((key, Self { params: params.clone(), a_tilde, cache: Arc::default() }))
    }

    pub fn params(&self) -> &DdhParams {
        &self.params
    }

    pub fn a_tilde(&self) -> &ZqMatrix {
        &self.a_tilde
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(DdhFamily::G.trapdoor_tag()).u32(self.params.n as u32);
        write_group(&mut w, &self.params.group);
        for e in self.a_tilde.entries() {
            w.big(e);
        }
        w.finish()
    }
}

impl DdhTrapH {
    /// Builds the H key `g^{(1;u)·vᵀ}` from explicit `u` and `v`.
    pub fn from_parts(params: &DdhParams, u: Vec<BigUint>, v: Vec<BigUint>) -> Result<(DdhKey, Self), DdhError> {
        let n = params.n;
        if u.len() != n || v.len() != n + 1 {
            return Err(DdhError::InvalidParams("H trapdoor shape".into()));
        }
        let q = params.group.q().clone();
        let mut a_tilde = ZqMatrix::zeros(n + 1, n + 1, &q);
        for i in 0..=n {
            let ui = if i == 0 { BigUint::one() } else { u[i - 1].clone() };
            for (j, vj) in v.iter().enumerate() {
                a_tilde.set(i, j, &ui * vj);
            }
        }
        let key = DdhKey {
            family: DdhFamily::H,
            params: params.clone(),
            grid: group_exp_matrix(&a_tilde, &params.group),
        };
        let u = u.into_iter().map(|x| x % &q).collect();
        Ok((key, Self { params: params.clone(), u }))
    }

    pub fn params(&self) -> &DdhParams {
        &self.params
    }

    pub fn u(&self) -> &[BigUint] {
        &self.u
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(DdhFamily::H.trapdoor_tag()).u32(self.params.n as u32);
        write_group(&mut w, &self.params.group);
        for e in &self.u {
            w.big(e);
        }
        w.finish()
    }
}

pub fn gen_f<R: RngCore + ?Sized>(params: &DdhParams, rng: &mut R) -> (DdhKey, DdhTrapF) {
    let n = params.n;
    let a = ZqMatrix::random(n + 1, n, params.group.q(), rng);
    let s: Vec<u8> = (0..n).map(|_| (rng.next_u32() & 1) as u8).collect();
    DdhTrapF::from_parts(params, a, s).expect("shapes are consistent by construction")
}

pub fn gen_g<R: RngCore + ?Sized>(params: &DdhParams, rng: &mut R) -> (DdhKey, DdhTrapG) {
    let n = params.n;
    let a_tilde = ZqMatrix::random(n + 1, n + 1, params.group.q(), rng);
    DdhTrapG::from_parts(params, a_tilde).expect("shapes are consistent by construction")
}

pub fn gen_h<R: RngCore + ?Sized>(params: &DdhParams, rng: &mut R) -> (DdhKey, DdhTrapH) {
    use num_bigint::RandBigInt;
    let n = params.n;
    let q = params.group.q();
    let mut r = RngAdapter(rng);
    let u = (0..n).map(|_| r.gen_biguint_below(q)).collect();
    let v = (0..=n).map(|_| r.gen_biguint_below(q)).collect();
    DdhTrapH::from_parts(params, u, v).expect("shapes are consistent by construction")
}

/// `f_{k,b}(x)` for F keys on the restricted domain.
pub fn eval_f(key: &DdhKey, b: u8, x: &[u64]) -> Result<Vec<BigUint>, DdhError> {
    key.eval_restricted(b, x)
}

/// `g_{k,b}(x)` on the extended domain.
pub fn eval_g(key: &DdhKey, b: &BigUint, x: &[BigUint]) -> Result<Vec<BigUint>, DdhError> {
    key.eval(b, x)
}

/// `h_{k,b}(x)` on the extended domain.
pub fn eval_h(key: &DdhKey, b: &BigUint, x: &[BigUint]) -> Result<Vec<BigUint>, DdhError> {
    key.eval(b, x)
}

/// Recomputes the image of `(b, x)` and compares with `y`. Uses only the key.
pub fn chk(key: &DdhKey, y: &[BigUint], b: &BigUint, x: &[BigUint]) -> bool {
    match key.eval(b, x) {
        Ok(img) => img.as_slice() == y,
        Err(_) => false,
    }
}

/// [`chk`] on a restricted-domain point.
pub fn chk_restricted(key: &DdhKey, y: &[BigUint], b: u8, x: &[u64]) -> bool {
    match key.eval_restricted(b, x) {
        Ok(img) => img.as_slice() == y,
        Err(_) => false,
    }
}

/// Applies `M` "in the exponent": `z_i = ∏_j y_j^{M_ij}`.
fn exp_apply(group: &GroupParams, m: &ZqMatrix, y: &[BigUint]) -> Vec<BigUint> {
    (0..m.rows()).map(|i| multi_exp(group, y.iter().zip(m.row(i)))).collect()
}

fn check_image_shape(params: &DdhParams, y: &[BigUint]) -> Result<(), DdhError> {
    if y.len() != params.n + 1 {
        return Err(DdhError::ShapeMismatch { expected: params.n + 1, found: y.len() });
    }
    if !y.iter().all(|e| params.group.contains(e)) {
        return Err(DdhError::NotInRange);
    }
    Ok(())
}

/// Recovers `x` with `f_{k,b}(x) = y`.
pub fn inv_f(trap: &DdhTrapF, b: u8, y: &[BigUint]) -> Result<Vec<u64>, DdhError> {
    let params = &trap.params;
    check_image_shape(params, y)?;
    if b > 1 {
        return Err(DdhError::DomainViolation);
    }
    let inverse = trap
        .cache
        .inverse
        .get_or_init(|| trap.a.pseudo_inverse().map_err(DdhError::from))
        .clone()?;
    let dlog = trap.cache.dlog.get_or_init(|| DlogTable::build(params));
    let group = &params.group;
    let z = exp_apply(group, &inverse, y);
    z.iter()
        .zip(&trap.s)
        .map(|(zi, &si)| {
            let gx = if b == 1 && si == 1 { group.mul(zi, &group.inverse(group.g())) } else { zi.clone() };
            dlog.lookup(&gx).ok_or(DdhError::NotInRange)
        })
        .collect()
}

/// Recovers the unique `(b, x) ∈ {0,1} × X` with `g_{k,b}(x) = y`.
pub fn inv_g(trap: &DdhTrapG, y: &[BigUint]) -> Result<(u8, Vec<u64>), DdhError> {
    let params = &trap.params;
    check_image_shape(params, y)?;
    let inverse = trap
        .cache
        .inverse
        .get_or_init(|| trap.a_tilde.inverse().map_err(DdhError::from))
        .clone()?;
    let dlog = trap.cache.dlog.get_or_init(|| DlogTable::build(params));
    let z = exp_apply(&params.group, &inverse, y);
    let (zx, zb) = z.split_at(params.n);
    let b = match dlog.lookup(&zb[0]) {
        Some(v @ (0 | 1)) => v as u8,
        _ => return Err(DdhError::NotInRestrictedRange),
    };
    let x = zx
        .iter()
        .map(|zi| dlog.lookup(zi).ok_or(DdhError::NotInRestrictedRange))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((b, x))
}

/// Whether `y = (y₀, y₀^{u₁}, …, y₀^{uₙ})`.
pub fn imchk_h(trap: &DdhTrapH, y: &[BigUint]) -> bool {
    let params = &trap.params;
    if y.len() != params.n + 1 || !y.iter().all(|e| params.group.contains(e)) {
        return false;
    }
    trap.u.iter().zip(&y[1..]).all(|(ui, yi)| params.group.exp(&y[0], ui) == *yi)
}

/// The other preimage of `f_{k,b}(x)`: `(b⊕1, x − (−1)^b·s)`, or `None`
/// when that point falls outside `X`.
pub fn claw_partner(trap: &DdhTrapF, b: u8, x: &[u64]) -> (u8, Option<Vec<u64>>) {
    let d = trap.params.d as i128;
    let partner: Option<Vec<u64>> = x
        .iter()
        .zip(&trap.s)
        .map(|(&xi, &si)| {
            let v = if b == 0 { xi as i128 - si as i128 } else { xi as i128 + si as i128 };
            (0..d).contains(&v).then_some(v as u64)
        })
        .collect();
    (b ^ 1, partner)
}

/// Whether `(x0, x1)` satisfy the claw relation `x1 = x0 − s` over the integers.
pub fn is_claw(trap: &DdhTrapF, x0: &[u64], x1: &[u64]) -> bool {
    x0.len() == trap.s.len()
        && x1.len() == trap.s.len()
        && x0.iter().zip(x1).zip(&trap.s).all(|((&a, &b), &s)| a as i128 - s as i128 == b as i128)
}

/// Converts an extended-domain point into `{0,1} × X` if it lies there.
pub fn restrict_point(params: &DdhParams, b: &BigUint, x: &[BigUint]) -> Option<(u8, Vec<u64>)> {
    let b = b.to_u8().filter(|v| *v <= 1)?;
    let x: Option<Vec<u64>> = x.iter().map(|v| v.to_u64().filter(|v| *v < params.d)).collect();
    let x = x?;
    (x.len() == params.n).then_some((b, x))
}

/// Lifts a restricted-domain point into the extended-domain representation.
pub fn lift_point(b: u8, x: &[u64]) -> (BigUint, Vec<BigUint>) {
    (BigUint::from(b), x.iter().map(|&v| BigUint::from(v)).collect())
}
