//! Prover strategies. Classical strategies see only the public key and their
//! coin tape; the honest-device simulator additionally receives the verifier's
//! trapdoor so that it can reproduce the quantum device's output distribution.
//! It is a test oracle, never a classical attack.

use std::fmt;
use std::sync::Arc;

use crate::algebra::BitString;
use crate::coins::{CoinError, CoinSource, CoinTape};
use crate::family::{DomainPoint, FamilyKey, FamilyTrapdoor, Suite};
use crate::protocol::{equation_bit, ProtocolError, Response, TwoRoundState};

/// How a prover draws its `(b, x)` from coins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreimageRule {
    /// `b ∈ {0,1}`, `x` uniform over `X_0 ∩ X_1`.
    Overlap,
    /// `b ∈ {0,1}`, `x` uniform over `X`.
    FullDomain,
    /// `b` uniform over `[2, q)`, `x` uniform over `X`.
    ExtendedBranch,
}

impl PreimageRule {
    pub fn draw<C: CoinSource + ?Sized>(self, suite: &Suite, coins: &mut C) -> Result<DomainPoint, CoinError> {
        let n = suite.n();
        let (b, (lo, hi)) = match self {
            PreimageRule::Overlap => (coins.draw_bit()? as u64, suite.overlap_range()),
            PreimageRule::FullDomain => (coins.draw_bit()? as u64, (0, suite.domain_bound())),
            PreimageRule::ExtendedBranch => (coins.draw_range(2, suite.modulus())?, (0, suite.domain_bound())),
        };
        let mut x = Vec::with_capacity(n);
        for _ in 0..n {
            x.push(coins.draw_range(lo, hi)?);
        }
        Ok(DomainPoint::new(b, x))
    }
}

fn draw_d<C: CoinSource + ?Sized>(w: usize, coins: &mut C) -> Result<BitString, CoinError> {
    let mut bytes = vec![0u8; w.div_ceil(8)];
    coins.read(&mut bytes)?;
    if w % 8 != 0 {
        let last = bytes.len() - 1;
        bytes[last] &= !(0xFFu8 >> (w % 8));
    }
    Ok(BitString::from_bytes(w, bytes).expect("padding cleared"))
}

/// Uniform nonzero `d` of length `w`, by rejection.
pub(crate) fn draw_nonzero_d<C: CoinSource + ?Sized>(w: usize, coins: &mut C) -> Result<BitString, CoinError> {
    loop {
        let d = draw_d(w, coins)?;
        if !d.is_zero() {
            return Ok(d);
        }
    }
}

fn eval_point(key: &FamilyKey, p: &DomainPoint, tape: &mut CoinTape) -> crate::family::Image {
    key.eval(p, tape).expect("preimage rules stay inside the evaluation range")
}

/// A prover that sees only the public key and its own coins.
pub trait ClassicalProver: Send + Sync {
    fn name(&self) -> &'static str;

    fn respond(&self, suite: &Suite, key: &FamilyKey, tape: &mut CoinTape) -> Response;

    /// Two-round interface: commit to `y` and prepare both round-two answers.
    fn commit(&self, suite: &Suite, key: &FamilyKey, tape: &mut CoinTape) -> TwoRoundState {
        let resp = self.respond(suite, key, tape);
        TwoRoundState { y: resp.y, preimage: None, equation: Some((resp.d, resp.c)) }
    }
}

/// A simulator that is handed the verifier's trapdoor.
pub trait TrapdoorSimulator: Send + Sync {
    fn name(&self) -> &'static str;

    fn respond(&self, suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, tape: &mut CoinTape) -> Response;

    fn commit(&self, suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, tape: &mut CoinTape) -> TwoRoundState;
}

/// Samples `y` at `(b, x)` drawn by `rule`; if the trapdoor exposes a claw
/// partner, `d` is uniform nonzero and `c` is the equation bit, otherwise
/// `(d, c)` is uniform.
fn claw_aware_response(
    suite: &Suite,
    key: &FamilyKey,
    trap: &FamilyTrapdoor,
    rule: PreimageRule,
    tape: &mut CoinTape,
) -> (DomainPoint, Response) {
    let p = rule.draw(suite, tape).expect("live tape");
    let y = eval_point(key, &p, tape);
    let resp = match trap.claw_partner(p.b as u8, &p.x) {
        Some((_, partner)) => {
            let d = draw_nonzero_d(suite.w(), tape).expect("live tape");
            let (x0, x1) = if p.b == 0 { (&p.x, &partner) } else { (&partner, &p.x) };
            let c = equation_bit(suite, x0, x1, &d);
            Response { y, d, c }
        }
        None => {
            let d = draw_d(suite.w(), tape).expect("live tape");
            let c = tape.draw_bit().expect("live tape") == 1;
            Response { y, d, c }
        }
    };
    (p, resp)
}

/// Trapdoor-assisted simulation of the honest quantum device. It draws from
/// a private stream derived from the tape seed and leaves the given tape
/// untouched, so nothing about `(b, x)` can be recovered from consumed coins.
#[derive(Clone, Copy, Debug, Default)]
pub struct HonestDevice;

impl HonestDevice {
    fn private_tape(tape: &CoinTape) -> CoinTape {
        CoinTape::derived(tape.seed(), "honest-device", 0)
    }
}

impl TrapdoorSimulator for HonestDevice {
    fn name(&self) -> &'static str {
        "honest_device"
    }

    fn respond(&self, suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, tape: &mut CoinTape) -> Response {
        let mut private = Self::private_tape(tape);
        claw_aware_response(suite, key, trap, PreimageRule::FullDomain, &mut private).1
    }

    /// The device either measures the preimage register or the Hadamard
    /// basis; both answers are prepared from the same superposition.
    fn commit(&self, suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, tape: &mut CoinTape) -> TwoRoundState {
        let mut private = Self::private_tape(tape);
        let (p, resp) = claw_aware_response(suite, key, trap, PreimageRule::FullDomain, &mut private);
        TwoRoundState { y: resp.y, preimage: Some(p), equation: Some((resp.d, resp.c)) }
    }
}

/// Test-only cheater holding the trapdoor: draws `(b, x)` from the tape like
/// a classical prover and answers the equation correctly whenever a claw
/// partner exists.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrapdoorCheater;

impl TrapdoorSimulator for TrapdoorCheater {
    fn name(&self) -> &'static str {
        "trapdoor_cheater"
    }

    fn respond(&self, suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, tape: &mut CoinTape) -> Response {
        claw_aware_response(suite, key, trap, PreimageRule::FullDomain, tape).1
    }

    fn commit(&self, suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, tape: &mut CoinTape) -> TwoRoundState {
        let (p, resp) = claw_aware_response(suite, key, trap, PreimageRule::FullDomain, tape);
        TwoRoundState { y: resp.y, preimage: Some(p), equation: Some((resp.d, resp.c)) }
    }
}

/// Evaluates at a tape-drawn `(b, x) ∈ {0,1} × (X_0 ∩ X_1)` and guesses `c`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClassicalCanonical;

impl ClassicalCanonical {
    pub const RULE: PreimageRule = PreimageRule::Overlap;
}

impl ClassicalProver for ClassicalCanonical {
    fn name(&self) -> &'static str {
        "classical_canonical"
    }

    fn respond(&self, suite: &Suite, key: &FamilyKey, tape: &mut CoinTape) -> Response {
        let p = Self::RULE.draw(suite, tape).expect("live tape");
        let y = eval_point(key, &p, tape);
        let d = draw_nonzero_d(suite.w(), tape).expect("live tape");
        let c = tape.draw_bit().expect("live tape") == 1;
        Response { y, d, c }
    }

    /// Stores its preimage, so the preimage test always passes.
    fn commit(&self, suite: &Suite, key: &FamilyKey, tape: &mut CoinTape) -> TwoRoundState {
        let p = Self::RULE.draw(suite, tape).expect("live tape");
        let y = eval_point(key, &p, tape);
        let d = draw_nonzero_d(suite.w(), tape).expect("live tape");
        let c = tape.draw_bit().expect("live tape") == 1;
        TwoRoundState { y, preimage: Some(p), equation: Some((d, c)) }
    }
}

/// Evaluates the shared branch formula at a branch `b ∉ {0,1}`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExtendedDomainProber;

impl ExtendedDomainProber {
    pub const RULE: PreimageRule = PreimageRule::ExtendedBranch;
}

impl ClassicalProver for ExtendedDomainProber {
    fn name(&self) -> &'static str {
        "extended_domain_prober"
    }

    fn respond(&self, suite: &Suite, key: &FamilyKey, tape: &mut CoinTape) -> Response {
        let p = Self::RULE.draw(suite, tape).expect("live tape");
        let y = eval_point(key, &p, tape);
        let d = draw_nonzero_d(suite.w(), tape).expect("live tape");
        let c = tape.draw_bit().expect("live tape") == 1;
        Response { y, d, c }
    }

    fn commit(&self, suite: &Suite, key: &FamilyKey, tape: &mut CoinTape) -> TwoRoundState {
        let p = Self::RULE.draw(suite, tape).expect("live tape");
        let y = eval_point(key, &p, tape);
        let d = draw_nonzero_d(suite.w(), tape).expect("live tape");
        let c = tape.draw_bit().expect("live tape") == 1;
        TwoRoundState { y, preimage: Some(p), equation: Some((d, c)) }
    }
}

/// Uniform `y`, `d`, `c` of the right shapes.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomNoiseProver;

impl ClassicalProver for RandomNoiseProver {
    fn name(&self) -> &'static str {
        "random_noise_prover"
    }

    fn respond(&self, suite: &Suite, _key: &FamilyKey, tape: &mut CoinTape) -> Response {
        let y = suite.random_image(tape);
        let d = draw_d(suite.w(), tape).expect("live tape");
        let c = tape.draw_bit().expect("live tape") == 1;
        Response { y, d, c }
    }
}

/// A named strategy with its capability flag.
#[derive(Clone)]
pub enum Strategy {
    Classical(Arc<dyn ClassicalProver>),
    Simulator(Arc<dyn TrapdoorSimulator>),
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Strategy").field(&self.name()).finish()
    }
}

impl Strategy {
    pub const NAMES: [&'static str; 5] = [
        "honest_device",
        "classical_canonical",
        "extended_domain_prober",
        "random_noise_prover",
        "trapdoor_cheater",
    ];

    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "honest_device" => Strategy::Simulator(Arc::new(HonestDevice)),
            "trapdoor_cheater" => Strategy::Simulator(Arc::new(TrapdoorCheater)),
            "classical_canonical" => Strategy::Classical(Arc::new(ClassicalCanonical)),
            "extended_domain_prober" => Strategy::Classical(Arc::new(ExtendedDomainProber)),
            "random_noise_prover" => Strategy::Classical(Arc::new(RandomNoiseProver)),
            _ => return None,
        })
    }

    pub fn honest_device() -> Self {
        Strategy::Simulator(Arc::new(HonestDevice))
    }

    pub fn classical_canonical() -> Self {
        Strategy::Classical(Arc::new(ClassicalCanonical))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Classical(p) => p.name(),
            Strategy::Simulator(p) => p.name(),
        }
    }

    /// Strategies that need the trapdoor never count as classical provers.
    pub fn needs_trapdoor(&self) -> bool {
        matches!(self, Strategy::Simulator(_))
    }

    /// The trapdoor is forwarded only to simulators, which refuse to run
    /// without one.
    pub fn respond(
        &self,
        suite: &Suite,
        key: &FamilyKey,
        trap: Option<&FamilyTrapdoor>,
        tape: &mut CoinTape,
    ) -> Result<Response, ProtocolError> {
        match (self, trap) {
            (Strategy::Classical(p), _) => Ok(p.respond(suite, key, tape)),
            (Strategy::Simulator(p), Some(t)) => Ok(p.respond(suite, key, t, tape)),
            (Strategy::Simulator(p), None) => Err(missing_oracle(p.name())),
        }
    }

    pub fn commit(
        &self,
        suite: &Suite,
        key: &FamilyKey,
        trap: Option<&FamilyTrapdoor>,
        tape: &mut CoinTape,
    ) -> Result<TwoRoundState, ProtocolError> {
        match (self, trap) {
            (Strategy::Classical(p), _) => Ok(p.commit(suite, key, tape)),
            (Strategy::Simulator(p), Some(t)) => Ok(p.commit(suite, key, t, tape)),
            (Strategy::Simulator(p), None) => Err(missing_oracle(p.name())),
        }
    }
}

fn missing_oracle(name: &str) -> ProtocolError {
    ProtocolError::ProverProtocolViolation(format!("{name} needs a trapdoor oracle"))
}

#[cfg(test)]
mod tests;
