//! Knowledge-game harnesses: extractors, `H_k` membership, the AHCB
//! adversary built from a prover and an extractor, and the t-KEA and LK-ε
//! experiments.
//!
//! Extractors are white-box: they read the prover's recorded coins. The
//! harnesses exercise the mechanics of the assumptions, not their truth.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{multi_exp, BitString, GroupParams};
use crate::coins::{derive_seed, derived_rng, CoinError, CoinSource, CoinTape, RecordedCoins, Seed};
use crate::ddh::{DdhParams, DdhTrapH};
use crate::family::{DomainPoint, FamilyError, FamilyKey, FamilyTrapdoor, Role, Suite};
use crate::lwe::{gen_trap, inf_norm, sub_mod, GadgetTrapdoor, LweMatrix};
use crate::parallel::map_trials;
use crate::protocol::{equation_bit, EqSet, NonZeroEqSet};
use crate::provers::{PreimageRule, Strategy};
use crate::stats::{wilson_interval, RateEstimate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("λ∞ enumeration needs q^k ≤ 2^16, got q = {q}, k = {k}")]
    LambdaInfUnavailable { q: u64, k: usize },
    #[error("invalid game parameters: {0}")]
    InvalidParams(String),
}

/// Trials, wins and per-reason counts of a game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub game: String,
    pub trials: u64,
    pub wins: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reasons: BTreeMap<String, u64>,
}

impl GameReport {
    pub fn new(game: &str, wins: u64, trials: u64, reasons: BTreeMap<String, u64>) -> Self {
        let rate = if trials == 0 { 0.0 } else { wins as f64 / trials as f64 };
        let (ci_low, ci_high) = if trials == 0 { (0.0, 1.0) } else { wilson_interval(wins, trials) };
        Self { game: game.into(), trials, wins, rate, ci_low, ci_high, reasons }
    }

    fn from_outcomes(game: &str, outcomes: impl IntoIterator<Item = (bool, &'static str)>) -> Self {
        let (mut wins, mut trials) = (0, 0);
        let mut reasons = BTreeMap::new();
        for (win, reason) in outcomes {
            trials += 1;
            wins += win as u64;
            *reasons.entry(reason.to_string()).or_insert(0) += 1;
        }
        Self::new(game, wins, trials, reasons)
    }

    /// Combines two partial tallies of the same game.
    pub fn merge(&self, other: &GameReport) -> GameReport {
        let mut reasons = self.reasons.clone();
        for (k, v) in &other.reasons {
            *reasons.entry(k.clone()).or_insert(0) += v;
        }
        GameReport::new(&self.game, self.wins + other.wins, self.trials + other.trials, reasons)
    }

    pub fn estimate(&self) -> RateEstimate {
        RateEstimate::new(self.wins, self.trials)
    }

    pub fn reason(&self, code: &str) -> u64 {
        self.reasons.get(code).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// A candidate AHCB output `(b, x, d, c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AhcbTuple {
    pub b: u8,
    pub x: Vec<u64>,
    pub d: BitString,
    pub c: bool,
}

impl AhcbTuple {
    pub fn flipped(&self) -> Self {
        Self { c: !self.c, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HkMembership {
    InH,
    InHbar,
    Neither,
}

impl HkMembership {
    pub fn as_str(self) -> &'static str {
        match self {
            HkMembership::InH => "InH",
            HkMembership::InHbar => "InHbar",
            HkMembership::Neither => "Neither",
        }
    }
}

fn by_equation_bit(c_correct: bool) -> HkMembership {
    if c_correct {
        HkMembership::InH
    } else {
        HkMembership::InHbar
    }
}

/// Membership in `H_k` / `H̄_k`: `x ∈ X_b`, the claw partner exists in `X`,
/// `d` lies in both equation sets and `c` is the equation bit.
pub fn hk_membership(suite: &Suite, trap: &FamilyTrapdoor, t: &AhcbTuple, eqset: &dyn EqSet) -> HkMembership {
    if t.d.len() != suite.w() || !suite.in_xb(t.b, &t.x) {
        return HkMembership::Neither;
    }
    let Some((b1, partner)) = trap.claw_partner(t.b, &t.x) else {
        return HkMembership::Neither;
    };
    if !suite.in_domain(&partner) || !eqset.contains(t.b, &t.x, &t.d) || !eqset.contains(b1, &partner, &t.d) {
        return HkMembership::Neither;
    }
    let (x0, x1) = if t.b == 0 { (&t.x, &partner) } else { (&partner, &t.x) };
    by_equation_bit(equation_bit(suite, x0, x1, &t.d) == t.c)
}

/// Membership in the restricted-domain sets `H'_s` / `H̄'_s`, computed
/// directly from the claw shift `s` with partner `x − (−1)^b·s`.
pub fn hk_membership_restricted(suite: &Suite, s: &[u8], t: &AhcbTuple, eqset: &dyn EqSet) -> HkMembership {
    if t.d.len() != suite.w() || s.len() != t.x.len() || !suite.in_xb(t.b, &t.x) {
        return HkMembership::Neither;
    }
    let q = suite.domain_bound() as i128;
    let modular = matches!(suite, Suite::Lwe(_));
    let partner: Option<Vec<u64>> = t
        .x
        .iter()
        .zip(s)
        .map(|(&xi, &si)| {
            let v = if t.b == 0 { xi as i128 - si as i128 } else { xi as i128 + si as i128 };
            if modular {
                Some(v.rem_euclid(q) as u64)
            } else {
                (0..q).contains(&v).then_some(v as u64)
            }
        })
        .collect();
    let Some(partner) = partner else {
        return HkMembership::Neither;
    };
    if !eqset.contains(t.b, &t.x, &t.d) || !eqset.contains(t.b ^ 1, &partner, &t.d) {
        return HkMembership::Neither;
    }
    let diff = suite.encode_j(&t.x).xor(&suite.encode_j(&partner)).expect("same length");
    let c = crate::algebra::gf2_dot(&t.d, &diff).expect("d has length w");
    by_equation_bit(c == t.c)
}

/// Recovers a preimage from a prover's recorded coins. Never sees a trapdoor.
pub trait Extractor: Send + Sync {
    fn name(&self) -> &'static str;

    fn extract(&self, suite: &Suite, key: &FamilyKey, coins: &mut RecordedCoins) -> Result<DomainPoint, CoinError>;
}

/// Re-reads `(b, x)` from the tape with the prover's own sampling rule.
#[derive(Clone, Copy, Debug)]
pub struct CanonicalExtractor {
    pub rule: PreimageRule,
}

impl CanonicalExtractor {
    pub fn new(rule: PreimageRule) -> Self {
        Self { rule }
    }
}

impl Default for CanonicalExtractor {
    fn default() -> Self {
        Self::new(PreimageRule::Overlap)
    }
}

impl Extractor for CanonicalExtractor {
    fn name(&self) -> &'static str {
        "canonical_extractor"
    }

    fn extract(&self, suite: &Suite, _key: &FamilyKey, coins: &mut RecordedCoins) -> Result<DomainPoint, CoinError> {
        self.rule.draw(suite, coins)
    }
}

/// Maps any output outside `{0,1} × X` to `(0, 0ⁿ)`.
pub struct RestrictedExtractor<E> {
    pub inner: E,
}

impl<E: Extractor> RestrictedExtractor<E> {
    pub fn new(inner: E) -> Self {
        Self { inner }
    }
}

impl<E: Extractor> Extractor for RestrictedExtractor<E> {
    fn name(&self) -> &'static str {
        "restricted_extractor"
    }

    fn extract(&self, suite: &Suite, key: &FamilyKey, coins: &mut RecordedCoins) -> Result<DomainPoint, CoinError> {
        let p = self.inner.extract(suite, key, coins)?;
        Ok(if suite.in_restricted(&p) { p } else { DomainPoint::zero(suite.n()) })
    }
}

/// The AHCB adversary: run the prover on `k` with fresh coins, run the
/// (restricted) extractor on the same coins, output `(b, x, d, c)`.
pub struct AdversaryB<E> {
    pub strategy: Strategy,
    pub extractor: RestrictedExtractor<E>,
}

/// Combines a prover and an extractor into an AHCB adversary.
pub fn build_adversary_b<E: Extractor>(strategy: Strategy, extractor: E) -> AdversaryB<E> {
    AdversaryB { strategy, extractor: RestrictedExtractor::new(extractor) }
}

impl<E: Extractor> AdversaryB<E> {
    /// `trap` is forwarded only when the strategy is a trapdoor simulator.
    pub fn run(&self, suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, seed: Seed) -> AhcbTuple {
        let mut tape = CoinTape::new(seed);
        let resp = self.strategy.respond(suite, key, Some(trap), &mut tape).expect("trapdoor supplied");
        let mut coins = tape.recorded();
        let p = self
            .extractor
            .extract(suite, key, &mut coins)
            .unwrap_or_else(|_| DomainPoint::zero(suite.n()));
        AhcbTuple { b: p.b as u8, x: p.x, d: resp.d, c: resp.c }
    }
}

/// Fraction of trials with `B(k) ∈ H_k`, over fresh F keys.
pub fn run_ahcb_game<E: Extractor>(
    suite: &Suite,
    adversary: &AdversaryB<E>,
    trials: usize,
    root: &Seed,
) -> Result<GameReport, GameError> {
    let outcomes = map_trials(trials, |i| -> Result<(bool, &'static str), GameError> {
        let (key, trap) = suite.generate(Role::F, &mut derived_rng(root, "ahcb-key", i as u64))?;
        let view = suite.decode_key(&key.encode_blind(), Role::F)?;
        let tuple = adversary.run(suite, &view, &trap, derive_seed(root, "ahcb-prover", i as u64));
        let m = hk_membership(suite, &trap, &tuple, &NonZeroEqSet);
        Ok((m == HkMembership::InH, m.as_str()))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(GameReport::from_outcomes("ahcb", outcomes))
}

/// Fraction of trials where the extractor's `(b, x)` passes `CHK` against
/// the prover's `y`, for keys of the given family.
pub fn estimate_extraction_rate(
    suite: &Suite,
    strategy: &Strategy,
    extractor: &dyn Extractor,
    role: Role,
    trials: usize,
    root: &Seed,
) -> Result<GameReport, GameError> {
    let outcomes = map_trials(trials, |i| -> Result<(bool, &'static str), GameError> {
        let (key, trap) = suite.generate(role, &mut derived_rng(root, "extraction-key", i as u64))?;
        let view = suite.decode_key(&key.encode_blind(), Role::F)?;
        let mut tape = CoinTape::new(derive_seed(root, "extraction-prover", i as u64));
        let resp = strategy.respond(suite, &view, Some(&trap), &mut tape).expect("trapdoor supplied");
        let mut coins = tape.recorded();
        Ok(match extractor.extract(suite, &view, &mut coins) {
            Err(_) => (false, "tape_exhausted"),
            Ok(p) if !suite.in_restricted(&p) => (key.chk(&resp.y, &p), "extracted_outside_domain"),
            Ok(p) if key.chk(&resp.y, &p) => (true, "extracted"),
            Ok(_) => (false, "chk_fail"),
        })
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(GameReport::from_outcomes(&format!("extraction/{}", role_name(role)), outcomes))
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::F => "F",
        Role::G => "G",
        Role::H => "H",
    }
}

/// A t-KEA instance `(g^r, g^{αr}, aux)`. It is read off an H key: row 0
/// of the grid is `g^v`, row 1 is `g^{u₁·v}`, and the remaining rows are
/// the auxiliary input.
#[derive(Clone, Debug)]
pub struct KeaInstance {
    pub group: GroupParams,
    pub g_r: Vec<BigUint>,
    pub g_alpha_r: Vec<BigUint>,
    pub aux: Vec<u8>,
    r: Vec<BigUint>,
    alpha: BigUint,
}

impl KeaInstance {
    pub fn sample(params: &DdhParams, rng: &mut impl rand::RngCore) -> Result<Self, GameError> {
        let group = params.group().clone();
        let n = params.n();
        let u: Vec<BigUint> = (0..n).map(|_| group.random_scalar(rng)).collect();
        let v: Vec<BigUint> = (0..=n).map(|_| group.random_scalar(rng)).collect();
        let (key, _) = DdhTrapH::from_parts(params, u.clone(), v.clone()).map_err(FamilyError::from)?;
        let grid = key.grid();
        let mut aux = crate::codec::Writer::new();
        for i in 2..grid.rows() {
            for e in grid.row(i) {
                aux.big(e);
            }
        }
        Ok(Self {
            g_r: grid.row(0).to_vec(),
            g_alpha_r: grid.row(1).to_vec(),
            aux: aux.finish(),
            r: v,
            alpha: u[0].clone(),
            group,
        })
    }

    pub fn t(&self) -> usize {
        self.g_r.len()
    }
}

/// Outputs `(f, f′)` from a t-KEA instance and its coins.
pub trait KeaAdversary: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(&self, inst: &KeaInstance, coins: &mut CoinTape) -> (BigUint, BigUint);
}

/// Returns an exponent vector from the same input and coins.
pub trait KeaExtractor: Send + Sync {
    fn name(&self) -> &'static str;

    fn extract(&self, inst: &KeaInstance, coins: &mut RecordedCoins) -> Result<Vec<BigUint>, CoinError>;
}

fn draw_exponents<C: CoinSource + ?Sized>(inst: &KeaInstance, coins: &mut C) -> Result<Vec<BigUint>, CoinError> {
    (0..inst.t()).map(|_| coins.draw_below_big(inst.group.q())).collect()
}

/// Picks `x` from its coins and outputs `(g^{⟨x,r⟩}, g^{α⟨x,r⟩})`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExponentiationAdversary;

impl KeaAdversary for ExponentiationAdversary {
    fn name(&self) -> &'static str {
        "exponentiation"
    }

    fn run(&self, inst: &KeaInstance, coins: &mut CoinTape) -> (BigUint, BigUint) {
        let x = draw_exponents(inst, coins).expect("live tape");
        (multi_exp(&inst.group, inst.g_r.iter().zip(&x)), multi_exp(&inst.group, inst.g_alpha_r.iter().zip(&x)))
    }
}

/// Outputs `(1, 1)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityAdversary;

impl KeaAdversary for IdentityAdversary {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn run(&self, inst: &KeaInstance, _coins: &mut CoinTape) -> (BigUint, BigUint) {
        (inst.group.identity(), inst.group.identity())
    }
}

/// Outputs two independent uniform group elements.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPairAdversary;

impl KeaAdversary for RandomPairAdversary {
    fn name(&self) -> &'static str {
        "random_pair"
    }

    fn run(&self, inst: &KeaInstance, coins: &mut CoinTape) -> (BigUint, BigUint) {
        let a = coins.draw_below_big(inst.group.q()).expect("live tape");
        let b = coins.draw_below_big(inst.group.q()).expect("live tape");
        (inst.group.gen_exp(&a), inst.group.gen_exp(&b))
    }
}

/// Replays the exponent draws of [`ExponentiationAdversary`].
#[derive(Clone, Copy, Debug, Default)]
pub struct TapeKeaExtractor;

impl KeaExtractor for TapeKeaExtractor {
    fn name(&self) -> &'static str {
        "tape"
    }

    fn extract(&self, inst: &KeaInstance, coins: &mut RecordedCoins) -> Result<Vec<BigUint>, CoinError> {
        draw_exponents(inst, coins)
    }
}

/// Always outputs `x = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroKeaExtractor;

impl KeaExtractor for ZeroKeaExtractor {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn extract(&self, inst: &KeaInstance, _coins: &mut RecordedCoins) -> Result<Vec<BigUint>, CoinError> {
        Ok(vec![BigUint::zero(); inst.t()])
    }
}

/// Counts the t-KEA failure event `f′ = f^α ∧ g^{⟨x,r⟩} ≠ f`. An extractor
/// that runs out of coins counts as outputting `x = 0`.
pub fn run_kea_experiment(
    adversary: &dyn KeaAdversary,
    extractor: &dyn KeaExtractor,
    params: &DdhParams,
    trials: usize,
    root: &Seed,
) -> Result<GameReport, GameError> {
    let outcomes = map_trials(trials, |i| -> Result<(bool, &'static str), GameError> {
        let inst = KeaInstance::sample(params, &mut derived_rng(root, "kea-instance", i as u64))?;
        let mut tape = CoinTape::new(derive_seed(root, "kea-adversary", i as u64));
        let (f, f_prime) = adversary.run(&inst, &mut tape);
        let paired = inst.group.exp(&f, &inst.alpha) == f_prime;
        let x = extractor
            .extract(&inst, &mut tape.recorded())
            .unwrap_or_else(|_| vec![BigUint::zero(); inst.t()]);
        let q = inst.group.q();
        let ip = x.iter().zip(&inst.r).fold(BigUint::zero(), |acc, (a, b)| (acc + a * b) % q);
        let explained = inst.group.gen_exp(&ip) == f;
        Ok(match (paired, explained) {
            (false, _) => (false, "unpaired"),
            (true, true) => (false, "extracted"),
            (true, false) => (true, "kea_failure"),
        })
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(GameReport::from_outcomes(&format!("kea/{}+{}", adversary.name(), extractor.name()), outcomes))
}

/// How `λ∞(L)` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaMode {
    /// Enumerate when `q^k ≤ 2^16`, else fall back to the proxy.
    Auto,
    /// Exhaustive enumeration over `Z_q^k`.
    Exact,
    /// The certified lower bound `2r + 1` from the decoding radius.
    Proxy,
}

/// Parameters of the lattice generator and the closeness constant ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LkParams {
    pub k: usize,
    pub m: usize,
    pub q: u64,
    pub epsilon: f64,
    pub mode: LambdaMode,
}

impl LkParams {
    /// Toy lattice small enough to enumerate.
    pub fn toy() -> Self {
        Self { k: 1, m: 12, q: 257, epsilon: 0.25, mode: LambdaMode::Auto }
    }

    fn enumerable(&self) -> bool {
        (self.q as u128).checked_pow(self.k as u32).is_some_and(|v| v <= 1 << 16)
    }
}

/// A q-ary lattice `L = A·Z_q^k + qZ^m` with its gadget trapdoor.
#[derive(Clone, Debug)]
pub struct LkLattice {
    a: LweMatrix,
    trap: GadgetTrapdoor,
    lambda: u64,
    exact: bool,
}

impl LkLattice {
    pub fn generate(params: &LkParams, rng: &mut impl rand::RngCore) -> Result<Self, GameError> {
        if !(0.0..0.5).contains(&params.epsilon) {
            return Err(GameError::InvalidParams("ε must lie in (0, 1/2)".into()));
        }
        let exact = match params.mode {
            LambdaMode::Exact if !params.enumerable() => {
                return Err(GameError::LambdaInfUnavailable { q: params.q, k: params.k })
            }
            LambdaMode::Exact => true,
            LambdaMode::Proxy => false,
            LambdaMode::Auto => params.enumerable(),
        };
        let (a, trap) =
            gen_trap(params.k, params.m, params.q, rng).map_err(|e| GameError::InvalidParams(e.to_string()))?;
        let mut lattice = Self { a, trap, lambda: 0, exact };
        lattice.lambda = if exact { lattice.exact_lambda() } else { lattice.trap.lambda_inf_lower_bound() };
        Ok(lattice)
    }

    pub fn basis(&self) -> &LweMatrix {
        &self.a
    }

    pub fn q(&self) -> u64 {
        self.a.q()
    }

    pub fn lambda_inf(&self) -> u64 {
        self.lambda
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    fn coefficient_vectors(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        let (q, k) = (self.q(), self.a.cols());
        (0..q.pow(k as u32)).map(move |mut idx| {
            (0..k)
                .map(|_| {
                    let v = idx % q;
                    idx /= q;
                    v
                })
                .collect()
        })
    }

    fn exact_lambda(&self) -> u64 {
        let q = self.q();
        self.coefficient_vectors()
            .filter(|s| s.iter().any(|&v| v != 0))
            .map(|s| inf_norm(&self.a.mul_vec(&s), q))
            .filter(|&norm| norm > 0)
            .min()
            .unwrap_or(q)
            .min(q)
    }

    /// Closest lattice point and its ∞-distance, if within `bound`.
    pub fn closest_within(&self, y: &[u64], bound: u64) -> Option<(Vec<u64>, u64)> {
        let q = self.q();
        if y.len() != self.a.rows() {
            return None;
        }
        if self.exact {
            self.coefficient_vectors()
                .map(|s| {
                    let p = self.a.mul_vec(&s);
                    let dist = inf_norm(&sub_mod(y, &p, q), q);
                    (p, dist)
                })
                .min_by_key(|(_, d)| *d)
                .filter(|(_, d)| *d <= bound)
        } else {
            let (s, e) = self.trap.invert(&self.a, y).ok()?;
            let dist = e.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            (dist <= bound).then(|| (self.a.mul_vec(&s), dist))
        }
    }

    pub fn contains(&self, p: &[u64]) -> bool {
        self.closest_within(p, 0).is_some()
    }
}

/// What the oracle tells the adversary.
pub type LkOracle<'a> = dyn FnMut(&[u64]) -> Option<Vec<u64>> + 'a;

/// Makes oracle queries given the basis and its coins. The oracle returns
/// `None` once the experiment has terminated.
pub trait LkAdversary: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(&self, lattice: &LkLattice, bound: u64, coins: &mut CoinTape, oracle: &mut LkOracle<'_>);
}

/// Proposes a lattice point for each query. `state` starts as a replay of
/// the adversary's coins.
pub trait LkExtractor: Send + Sync {
    fn name(&self) -> &'static str;

    fn extract(&self, lattice: &LkLattice, y: &[u64], bound: u64, state: &mut CoinTape) -> Vec<u64>;
}

fn draw_nonzero_coefficients(lattice: &LkLattice, coins: &mut CoinTape) -> Vec<u64> {
    loop {
        let s: Vec<u64> = (0..lattice.a.cols()).map(|_| coins.draw_below(lattice.q()).expect("live tape")).collect();
        if s.iter().any(|&v| v != 0) {
            return s;
        }
    }
}

fn draw_perturbation(lattice: &LkLattice, bound: u64, coins: &mut CoinTape) -> Vec<u64> {
    let q = lattice.q();
    (0..lattice.a.rows())
        .map(|_| {
            let v = coins.draw_below(2 * bound + 1).expect("live tape") as i64 - bound as i64;
            v.rem_euclid(q as i64) as u64
        })
        .collect()
}

/// Queries `A·s + e` for nonzero `s` and `‖e‖∞ ≤ ε·λ∞`.
#[derive(Clone, Copy, Debug)]
pub struct PerturbAdversary {
    pub queries: usize,
}

impl Default for PerturbAdversary {
    fn default() -> Self {
        Self { queries: 1 }
    }
}

impl LkAdversary for PerturbAdversary {
    fn name(&self) -> &'static str {
        "perturb"
    }

    fn run(&self, lattice: &LkLattice, bound: u64, coins: &mut CoinTape, oracle: &mut LkOracle<'_>) {
        for _ in 0..self.queries {
            let s = draw_nonzero_coefficients(lattice, coins);
            let e = draw_perturbation(lattice, bound, coins);
            let y = crate::lwe::add_mod(&lattice.a.mul_vec(&s), &e, lattice.q());
            if oracle(&y).is_none() {
                return;
            }
        }
    }
}

/// Queries a uniform point of `Z_q^m`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FarAdversary;

impl LkAdversary for FarAdversary {
    fn name(&self) -> &'static str {
        "far"
    }

    fn run(&self, lattice: &LkLattice, _bound: u64, coins: &mut CoinTape, oracle: &mut LkOracle<'_>) {
        let y: Vec<u64> = (0..lattice.a.rows()).map(|_| coins.draw_below(lattice.q()).expect("live tape")).collect();
        oracle(&y);
    }
}

/// Replays [`PerturbAdversary`]'s draws and returns `A·s`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TapeLkExtractor;

impl LkExtractor for TapeLkExtractor {
    fn name(&self) -> &'static str {
        "tape"
    }

    fn extract(&self, lattice: &LkLattice, _y: &[u64], bound: u64, state: &mut CoinTape) -> Vec<u64> {
        let s = draw_nonzero_coefficients(lattice, state);
        let _ = draw_perturbation(lattice, bound, state);
        lattice.a.mul_vec(&s)
    }
}

/// Always proposes the origin.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroLkExtractor;

impl LkExtractor for ZeroLkExtractor {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn extract(&self, lattice: &LkLattice, _y: &[u64], _bound: u64, _state: &mut CoinTape) -> Vec<u64> {
        vec![0; lattice.a.rows()]
    }
}

/// Proposes the query point itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct EchoLkExtractor;

impl LkExtractor for EchoLkExtractor {
    fn name(&self) -> &'static str {
        "echo"
    }

    fn extract(&self, _lattice: &LkLattice, y: &[u64], _bound: u64, _state: &mut CoinTape) -> Vec<u64> {
        y.to_vec()
    }
}

/// Outcome of one LK-ε experiment and the guard that decided it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LkOutcome {
    /// A query was not ε-close to the lattice.
    Far,
    /// The extractor proposed a point outside the lattice.
    NotInLattice,
    /// The proposed point was farther than ε·λ∞ from the query.
    TooFar,
    /// Every query was answered.
    Completed,
}

impl LkOutcome {
    pub fn result(self) -> bool {
        matches!(self, LkOutcome::NotInLattice | LkOutcome::TooFar)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LkOutcome::Far => "far",
            LkOutcome::NotInLattice => "not_in_lattice",
            LkOutcome::TooFar => "too_far",
            LkOutcome::Completed => "completed",
        }
    }
}

/// One run of the experiment on a given lattice.
pub fn lk_experiment_once(
    lattice: &LkLattice,
    epsilon: f64,
    adversary: &dyn LkAdversary,
    extractor: &dyn LkExtractor,
    seed: Seed,
) -> LkOutcome {
    let bound = (epsilon * lattice.lambda_inf() as f64).floor() as u64;
    let q = lattice.q();
    let mut coins = CoinTape::new(seed);
    let mut state = CoinTape::new(seed);
    let mut outcome = LkOutcome::Completed;
    let mut oracle = |y: &[u64]| -> Option<Vec<u64>> {
        if outcome != LkOutcome::Completed {
            return None;
        }
        let p = extractor.extract(lattice, y, bound, &mut state);
        if lattice.closest_within(y, bound).is_none() {
            outcome = LkOutcome::Far;
            return None;
        }
        if !lattice.contains(&p) {
            outcome = LkOutcome::NotInLattice;
            return None;
        }
        if inf_norm(&sub_mod(&p, y, q), q) > bound {
            outcome = LkOutcome::TooFar;
            return None;
        }
        Some(p)
    };
    adversary.run(lattice, bound, &mut coins, &mut oracle);
    outcome
}

/// Empirical LK-ε advantage over fresh lattices.
pub fn run_lk_experiment(
    adversary: &dyn LkAdversary,
    extractor: &dyn LkExtractor,
    params: &LkParams,
    trials: usize,
    root: &Seed,
) -> Result<GameReport, GameError> {
    let outcomes = map_trials(trials, |i| -> Result<(bool, &'static str), GameError> {
        let lattice = LkLattice::generate(params, &mut derived_rng(root, "lk-lattice", i as u64))?;
        let o = lk_experiment_once(&lattice, params.epsilon, adversary, extractor, derive_seed(root, "lk-adversary", i as u64));
        Ok((o.result(), o.as_str()))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(GameReport::from_outcomes(&format!("lk/{}+{}", adversary.name(), extractor.name()), outcomes))
}

#[cfg(test)]
mod tests;
