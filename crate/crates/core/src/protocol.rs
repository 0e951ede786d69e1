//! Challenge sampling, verifier checks and session orchestration for the
//! two-round baseline and the two single-round protocols.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{gf2_dot, BitString};
use crate::codec::{CodecError, Reader, Writer};
use crate::coins::{derive_seed, derived_rng, CoinTape, Seed};
use crate::family::{DomainPoint, FamilyError, FamilyKey, FamilyTrapdoor, Image, Role, Suite};
use crate::profile::ParamProfile;
use crate::provers::Strategy;
use crate::stats::RateEstimate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("protocol {protocol} cannot run over the {suite} suite")]
    UnsupportedSuite { protocol: ProtocolId, suite: &'static str },
    #[error("prover protocol violation: {0}")]
    ProverProtocolViolation(String),
}

/// Which protocol a session runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum ProtocolId {
    /// Two-round preimage/equation baseline.
    TwoRound,
    /// Single round with tests {Eq, sIm, wIm}.
    ThreeTest,
    /// Single round with tests {Eq, Im}.
    TwoTest,
}

impl ProtocolId {
    pub fn number(self) -> u8 {
        match self {
            ProtocolId::TwoRound => 1,
            ProtocolId::ThreeTest => 3,
            ProtocolId::TwoTest => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(ProtocolId::TwoRound),
            3 => Some(ProtocolId::ThreeTest),
            4 => Some(ProtocolId::TwoTest),
            _ => None,
        }
    }

    /// DDH for the three-test protocol, LWE otherwise.
    pub fn default_suite(self, profile: &ParamProfile) -> Suite {
        match self {
            ProtocolId::ThreeTest => Suite::ddh(profile.ddh().clone()).expect("built-in groups fit in 64 bits"),
            ProtocolId::TwoRound | ProtocolId::TwoTest => Suite::lwe(profile.lwe().clone()),
        }
    }

    /// Classical soundness constant of the protocol.
    pub fn soundness_bound(self) -> f64 {
        match self {
            ProtocolId::ThreeTest => 5.0 / 6.0,
            ProtocolId::TwoRound | ProtocolId::TwoTest => 3.0 / 4.0,
        }
    }

    /// Honest acceptance target: `(2 + c_F)/3` or `(1 + c_F)/2`.
    pub fn completeness_target(self, suite: &Suite) -> f64 {
        let c = suite.overlap_fraction();
        match self {
            ProtocolId::ThreeTest => (2.0 + c) / 3.0,
            ProtocolId::TwoTest => (1.0 + c) / 2.0,
            ProtocolId::TwoRound => 1.0,
        }
    }

    pub fn challenge_types(self) -> &'static [ChallengeType] {
        match self {
            ProtocolId::TwoRound => &[ChallengeType::Preimage, ChallengeType::Equation],
            ProtocolId::ThreeTest => &[ChallengeType::Eq, ChallengeType::SIm, ChallengeType::WIm],
            ProtocolId::TwoTest => &[ChallengeType::Eq, ChallengeType::Im],
        }
    }
}

impl From<ProtocolId> for u8 {
    fn from(p: ProtocolId) -> u8 {
        p.number()
    }
}

impl TryFrom<u8> for ProtocolId {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, String> {
        ProtocolId::from_number(n).ok_or_else(|| format!("unknown protocol {n}"))
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChallengeType {
    Eq,
    #[serde(rename = "sIm")]
    SIm,
    #[serde(rename = "wIm")]
    WIm,
    Im,
    Preimage,
    Equation,
}

impl ChallengeType {
    pub fn code(self) -> u8 {
        match self {
            ChallengeType::Eq => 1,
            ChallengeType::SIm => 2,
            ChallengeType::WIm => 3,
            ChallengeType::Im => 4,
            ChallengeType::Preimage => 5,
            ChallengeType::Equation => 6,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            1 => ChallengeType::Eq,
            2 => ChallengeType::SIm,
            3 => ChallengeType::WIm,
            4 => ChallengeType::Im,
            5 => ChallengeType::Preimage,
            6 => ChallengeType::Equation,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChallengeType::Eq => "Eq",
            ChallengeType::SIm => "sIm",
            ChallengeType::WIm => "wIm",
            ChallengeType::Im => "Im",
            ChallengeType::Preimage => "Preimage",
            ChallengeType::Equation => "Equation",
        }
    }

    /// Family whose key is issued for this challenge.
    pub fn role(self) -> Role {
        match self {
            ChallengeType::Eq | ChallengeType::Preimage | ChallengeType::Equation => Role::F,
            ChallengeType::SIm | ChallengeType::Im => Role::G,
            ChallengeType::WIm => Role::H,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    DZero,
    EquationMismatch,
    ClawMissing,
    XbViolation,
    ImageCheckFail,
    InversionFail,
    FormatError,
    Timeout,
}

impl RejectReason {
    pub const ALL: [RejectReason; 8] = [
        RejectReason::DZero,
        RejectReason::EquationMismatch,
        RejectReason::ClawMissing,
        RejectReason::XbViolation,
        RejectReason::ImageCheckFail,
        RejectReason::InversionFail,
        RejectReason::FormatError,
        RejectReason::Timeout,
    ];

    pub fn code(self) -> u8 {
        RejectReason::ALL.iter().position(|&r| r == self).expect("listed") as u8 + 1
    }

    pub fn from_code(c: u8) -> Option<Self> {
        RejectReason::ALL.get((c as usize).checked_sub(1)?).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::DZero => "DZero",
            RejectReason::EquationMismatch => "EquationMismatch",
            RejectReason::ClawMissing => "ClawMissing",
            RejectReason::XbViolation => "XbViolation",
            RejectReason::ImageCheckFail => "ImageCheckFail",
            RejectReason::InversionFail => "InversionFail",
            RejectReason::FormatError => "FormatError",
            RejectReason::Timeout => "Timeout",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn accepted(self) -> bool {
        self == Verdict::Accept
    }

    pub fn reason(self) -> Option<RejectReason> {
        match self {
            Verdict::Accept => None,
            Verdict::Reject(r) => Some(r),
        }
    }
}

/// The prover's single message `(y, d, c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Response {
    pub y: Image,
    pub d: BitString,
    pub c: bool,
}

impl Response {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.y.encode_into(&mut w);
        w.u32(self.d.len() as u32).bytes(self.d.as_bytes()).u8(self.c as u8);
        w.finish()
    }

    /// Strict decoding against the suite's shapes; any deviation is a format error.
    pub fn decode(suite: &Suite, bytes: &[u8]) -> Result<Self, FamilyError> {
        let mut r = Reader::new(bytes);
        let y = suite.read_image(&mut r)?;
        let d = read_bits(&mut r)?;
        let c = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(CodecError::Invalid("c must be a bit").into()),
        };
        r.finish()?;
        Ok(Self { y, d, c })
    }
}

fn read_bits(r: &mut Reader<'_>) -> Result<BitString, CodecError> {
    let len = r.u32()? as usize;
    let bytes = r.bytes()?.to_vec();
    if bytes.len() != len.div_ceil(8) {
        return Err(CodecError::Invalid("bit string length"));
    }
    BitString::from_bytes(len, bytes).map_err(|_| CodecError::Invalid("bit string padding"))
}

/// A sampled challenge: type, issued key and the verifier's trapdoor.
#[derive(Clone, Debug)]
pub struct Challenge {
    pub ctype: ChallengeType,
    pub key: FamilyKey,
    pub trapdoor: FamilyTrapdoor,
}

/// Draws `a` uniformly from the protocol's test set and generates the
/// matching key. For the two-round baseline the key is always an F key and
/// the returned type is the round-two test.
pub fn sample_challenge<R: RngCore + ?Sized>(
    protocol: ProtocolId,
    suite: &Suite,
    rng: &mut R,
) -> Result<Challenge, ProtocolError> {
    if protocol == ProtocolId::ThreeTest && !suite.supports(Role::H) {
        return Err(ProtocolError::UnsupportedSuite { protocol, suite: suite.name() });
    }
    let types = protocol.challenge_types();
    let ctype = types[rng.gen_range(0..types.len())];
    let (key, trapdoor) = suite.generate(ctype.role(), rng)?;
    Ok(Challenge { ctype, key, trapdoor })
}

/// Membership test for the equation sets `G_{k,b,x}`.
pub trait EqSet: Send + Sync {
    fn contains(&self, b: u8, x: &[u64], d: &BitString) -> bool;
}

/// Accepts every nonzero `d`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NonZeroEqSet;

impl EqSet for NonZeroEqSet {
    fn contains(&self, _b: u8, _x: &[u64], d: &BitString) -> bool {
        !d.is_zero()
    }
}

fn well_formed(suite: &Suite, resp: &Response) -> bool {
    suite.image_well_formed(&resp.y) && resp.d.len() == suite.w()
}

/// `(J(x0) ⊕ J(x1)) · d`.
pub fn equation_bit(suite: &Suite, x0: &[u64], x1: &[u64], d: &BitString) -> bool {
    let diff = suite.encode_j(x0).xor(&suite.encode_j(x1)).expect("same length");
    gf2_dot(d, &diff).expect("d has length w")
}

/// The equation test. Checks run in order: inversion, `CHK` on both
/// preimages, claw relation, `x_b ∈ X_b`, equation sets, equation bit.
pub fn verify_eq(
    suite: &Suite,
    key: &FamilyKey,
    trap: &FamilyTrapdoor,
    resp: &Response,
    eqset: &dyn EqSet,
) -> Verdict {
    if !well_formed(suite, resp) {
        return Verdict::Reject(RejectReason::FormatError);
    }
    let (x0, x1) = match (trap.invert_branch(0, &resp.y), trap.invert_branch(1, &resp.y)) {
        (Ok(x0), Ok(x1)) => (x0, x1),
        _ => return Verdict::Reject(RejectReason::InversionFail),
    };
    if !key.chk(&resp.y, &DomainPoint::new(0, x0.clone())) || !key.chk(&resp.y, &DomainPoint::new(1, x1.clone())) {
        return Verdict::Reject(RejectReason::ImageCheckFail);
    }
    if !trap.is_claw(&x0, &x1) {
        return Verdict::Reject(RejectReason::ClawMissing);
    }
    if !suite.in_xb(0, &x0) || !suite.in_xb(1, &x1) {
        return Verdict::Reject(RejectReason::XbViolation);
    }
    if !eqset.contains(0, &x0, &resp.d) || !eqset.contains(1, &x1, &resp.d) {
        return Verdict::Reject(RejectReason::DZero);
    }
    if equation_bit(suite, &x0, &x1, &resp.d) != resp.c {
        return Verdict::Reject(RejectReason::EquationMismatch);
    }
    Verdict::Accept
}

/// The strong image test: `(b, x) = INV_G(t, y)` must exist in `{0,1} × X`
/// and pass `CHK`.
pub fn verify_sim(suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, resp: &Response) -> Verdict {
    if !well_formed(suite, resp) {
        return Verdict::Reject(RejectReason::FormatError);
    }
    let point = match trap.invert_injective(&resp.y) {
        Ok(p) => p,
        Err(_) => return Verdict::Reject(RejectReason::InversionFail),
    };
    if !suite.in_restricted(&point) || !key.chk(&resp.y, &point) {
        return Verdict::Reject(RejectReason::ImageCheckFail);
    }
    Verdict::Accept
}

/// The image test of the two-test protocol (same check as [`verify_sim`]).
pub fn verify_im(suite: &Suite, key: &FamilyKey, trap: &FamilyTrapdoor, resp: &Response) -> Verdict {
    verify_sim(suite, key, trap, resp)
}

/// The weak image test: only `ImCHK_H(t, y)`; `d` and `c` are ignored.
pub fn verify_wim(suite: &Suite, trap: &FamilyTrapdoor, resp: &Response) -> Verdict {
    if !well_formed(suite, resp) {
        return Verdict::Reject(RejectReason::FormatError);
    }
    match trap.image_check(&resp.y) {
        Ok(true) => Verdict::Accept,
        _ => Verdict::Reject(RejectReason::ImageCheckFail),
    }
}

/// Round-two preimage test: `(b, x) ∈ {0,1} × X` with `CHK(k, y, b, x) = 1`.
pub fn verify_preimage(suite: &Suite, key: &FamilyKey, y: &Image, point: &DomainPoint) -> Verdict {
    if !suite.image_well_formed(y) {
        return Verdict::Reject(RejectReason::FormatError);
    }
    if suite.in_restricted(point) && key.chk(y, point) {
        Verdict::Accept
    } else {
        Verdict::Reject(RejectReason::ImageCheckFail)
    }
}

/// Dispatches a single-round response to the check for its challenge type.
pub fn verify(suite: &Suite, challenge: &Challenge, resp: &Response, eqset: &dyn EqSet) -> Verdict {
    match challenge.ctype {
        ChallengeType::Eq | ChallengeType::Equation => verify_eq(suite, &challenge.key, &challenge.trapdoor, resp, eqset),
        ChallengeType::SIm => verify_sim(suite, &challenge.key, &challenge.trapdoor, resp),
        ChallengeType::Im => verify_im(suite, &challenge.key, &challenge.trapdoor, resp),
        ChallengeType::WIm => verify_wim(suite, &challenge.trapdoor, resp),
        ChallengeType::Preimage => Verdict::Reject(RejectReason::FormatError),
    }
}

/// Verifies raw response bytes; undecodable bytes are a format error.
pub fn verify_bytes(suite: &Suite, challenge: &Challenge, bytes: &[u8], eqset: &dyn EqSet) -> Verdict {
    match Response::decode(suite, bytes) {
        Ok(resp) => verify(suite, challenge, &resp, eqset),
        Err(_) => Verdict::Reject(RejectReason::FormatError),
    }
}

/// Seeds of one session: the verifier's root seed and counter, and the
/// prover's tape seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SessionSeeds {
    pub verifier_root: Seed,
    pub index: u64,
    pub prover: Seed,
}

impl SessionSeeds {
    /// Seeds for session `index` of a batch driven by a single root seed.
    pub fn batch(root: &Seed, index: u64) -> Self {
        Self { verifier_root: *root, index, prover: derive_seed(root, "prover", index) }
    }

    /// Verifier randomness for this session.
    pub fn verifier_rng(&self) -> rand_chacha::ChaCha20Rng {
        derived_rng(&self.verifier_root, "verifier", self.index)
    }

    /// 16-byte session identifier.
    pub fn session_id(&self) -> [u8; 16] {
        let full = derive_seed(&self.verifier_root, "session-id", self.index);
        full[..16].try_into().expect("16 bytes")
    }
}

/// One full session as exported to transcript logs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub session_index: u64,
    pub protocol: ProtocolId,
    pub suite: String,
    pub strategy: String,
    pub challenge: ChallengeType,
    /// Lowercase hex of the wire (family-concealed) key encoding.
    pub key: String,
    /// Lowercase hex of the response encoding.
    pub response: String,
    pub verdict: VerdictKind,
    pub reason: Option<RejectReason>,
    pub prover_us: u64,
    pub verify_us: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    Accept,
    Reject,
}

impl Transcript {
    pub fn accepted(&self) -> bool {
        self.verdict == VerdictKind::Accept
    }

    pub fn verdict(&self) -> Verdict {
        match self.reason {
            None => Verdict::Accept,
            Some(r) => Verdict::Reject(r),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("transcripts serialize")
    }
}

fn kind(v: Verdict) -> VerdictKind {
    if v.accepted() {
        VerdictKind::Accept
    } else {
        VerdictKind::Reject
    }
}

/// Round-two answers prepared by a two-round prover after committing to `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoRoundState {
    pub y: Image,
    pub preimage: Option<DomainPoint>,
    pub equation: Option<(BitString, bool)>,
}

fn encode_two_round(y: &Image, answer: &TwoRoundAnswer) -> Vec<u8> {
    let mut w = Writer::new();
    y.encode_into(&mut w);
    match answer {
        TwoRoundAnswer::Preimage(p) => {
            w.u8(1).u64(p.b).u32(p.x.len() as u32);
            for &v in &p.x {
                w.u64(v);
            }
        }
        TwoRoundAnswer::Equation(d, c) => {
            w.u8(2).u32(d.len() as u32).bytes(d.as_bytes()).u8(*c as u8);
        }
        TwoRoundAnswer::Missing => {
            w.u8(0);
        }
    }
    w.finish()
}

enum TwoRoundAnswer {
    Preimage(DomainPoint),
    Equation(BitString, bool),
    Missing,
}

/// The two-round baseline: commit to `y`, then answer a preimage or an
/// equation challenge drawn with probability 1/2 each.
pub fn run_two_round_baseline(
    suite: &Suite,
    strategy: &Strategy,
    seeds: &SessionSeeds,
    eqset: &dyn EqSet,
) -> Result<Transcript, ProtocolError> {
    let mut vrng = seeds.verifier_rng();
    let challenge = sample_challenge(ProtocolId::TwoRound, suite, &mut vrng)?;
    let view = suite.decode_key(&challenge.key.encode_blind(), Role::F)?;
    let mut tape = CoinTape::new(seeds.prover);
    let t0 = Instant::now();
    let state = strategy.commit(suite, &view, Some(&challenge.trapdoor), &mut tape)?;
    let prover_us = t0.elapsed().as_micros() as u64;
    let t1 = Instant::now();
    let (verdict, answer) = match challenge.ctype {
        ChallengeType::Preimage => match state.preimage {
            Some(p) => (verify_preimage(suite, &challenge.key, &state.y, &p), TwoRoundAnswer::Preimage(p)),
            None => (Verdict::Reject(RejectReason::FormatError), TwoRoundAnswer::Missing),
        },
        _ => match state.equation {
            Some((d, c)) => {
                let resp = Response { y: state.y.clone(), d: d.clone(), c };
                (verify_eq(suite, &challenge.key, &challenge.trapdoor, &resp, eqset), TwoRoundAnswer::Equation(d, c))
            }
            None => (Verdict::Reject(RejectReason::FormatError), TwoRoundAnswer::Missing),
        },
    };
    let verify_us = t1.elapsed().as_micros() as u64;
    Ok(Transcript {
        session_id: hex::encode(seeds.session_id()),
        session_index: seeds.index,
        protocol: ProtocolId::TwoRound,
        suite: suite.name().into(),
        strategy: strategy.name().into(),
        challenge: challenge.ctype,
        key: hex::encode(challenge.key.encode_blind()),
        response: hex::encode(encode_two_round(&state.y, &answer)),
        verdict: kind(verdict),
        reason: verdict.reason(),
        prover_us,
        verify_us,
    })
}

/// Runs one session of any protocol. The prover sees only the
/// family-concealed key, decoded exactly as a network client would.
pub fn run_session(
    protocol: ProtocolId,
    suite: &Suite,
    strategy: &Strategy,
    seeds: &SessionSeeds,
    eqset: &dyn EqSet,
) -> Result<Transcript, ProtocolError> {
    if protocol == ProtocolId::TwoRound {
        return run_two_round_baseline(suite, strategy, seeds, eqset);
    }
    let mut vrng = seeds.verifier_rng();
    let challenge = sample_challenge(protocol, suite, &mut vrng)?;
    let view = suite.decode_key(&challenge.key.encode_blind(), Role::F)?;
    let mut tape = CoinTape::new(seeds.prover);
    let t0 = Instant::now();
    let resp = strategy.respond(suite, &view, Some(&challenge.trapdoor), &mut tape)?;
    let prover_us = t0.elapsed().as_micros() as u64;
    let bytes = resp.encode();
    let t1 = Instant::now();
    let verdict = verify_bytes(suite, &challenge, &bytes, eqset);
    let verify_us = t1.elapsed().as_micros() as u64;
    Ok(Transcript {
        session_id: hex::encode(seeds.session_id()),
        session_index: seeds.index,
        protocol,
        suite: suite.name().into(),
        strategy: strategy.name().into(),
        challenge: challenge.ctype,
        key: hex::encode(challenge.key.encode_blind()),
        response: hex::encode(bytes),
        verdict: kind(verdict),
        reason: verdict.reason(),
        prover_us,
        verify_us,
    })
}

/// Re-derives the challenge of a session and re-checks its logged response.
pub fn replay_verdict(
    protocol: ProtocolId,
    suite: &Suite,
    seeds: &SessionSeeds,
    response_hex: &str,
    eqset: &dyn EqSet,
) -> Result<Verdict, ProtocolError> {
    let challenge = sample_challenge(protocol, suite, &mut seeds.verifier_rng())?;
    let bytes = hex::decode(response_hex).map_err(|_| ProtocolError::ProverProtocolViolation("response is not hex".into()))?;
    Ok(verify_bytes(suite, &challenge, &bytes, eqset))
}

/// Runs `trials` sessions with seeds derived from `root`, in index order.
pub fn run_sessions(
    protocol: ProtocolId,
    suite: &Suite,
    strategy: &Strategy,
    trials: usize,
    root: &Seed,
) -> Result<Vec<Transcript>, ProtocolError> {
    crate::parallel::map_trials(trials, |i| {
        run_session(protocol, suite, strategy, &SessionSeeds::batch(root, i as u64), &NonZeroEqSet)
    })
    .into_iter()
    .collect()
}

/// Acceptance tallies, overall and per challenge type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionTally {
    pub overall: RateEstimate,
    pub per_type: BTreeMap<String, RateEstimate>,
    pub reasons: BTreeMap<String, u64>,
}

impl SessionTally {
    pub fn from_transcripts(ts: &[Transcript]) -> Self {
        let mut per: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        let mut reasons = BTreeMap::new();
        let mut wins = 0;
        for t in ts {
            let e = per.entry(t.challenge.as_str().to_string()).or_default();
            e.1 += 1;
            if t.accepted() {
                e.0 += 1;
                wins += 1;
            } else if let Some(r) = t.reason {
                *reasons.entry(r.as_str().to_string()).or_insert(0) += 1;
            }
        }
        Self {
            overall: RateEstimate::new(wins, ts.len() as u64),
            per_type: per.into_iter().map(|(k, (s, n))| (k, RateEstimate::new(s, n))).collect(),
            reasons,
        }
    }
}
