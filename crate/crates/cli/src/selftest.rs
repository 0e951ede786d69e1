//! Exhaustive toy-scale checks, one group per module. Fixed seeds throughout
//! the structural checks so that reports are byte-identical across runs.

use std::collections::{BTreeMap, HashMap};

use poqka_core::algebra::{binary_decode_j, binary_encode_j};
use poqka_core::codec::Writer;
use poqka_core::coins::{derived_rng, CoinTape, Seed};
use poqka_core::family::{DomainPoint, FamilyKey, FamilyTrapdoor, Image, Role, Suite};
use poqka_core::games::{
    build_adversary_b, hk_membership, HkMembership, run_kea_experiment, run_lk_experiment, AhcbTuple, CanonicalExtractor,
    EchoLkExtractor, ExponentiationAdversary, FarAdversary, LkParams, PerturbAdversary, RandomPairAdversary,
    TapeKeaExtractor, TapeLkExtractor, ZeroKeaExtractor, ZeroLkExtractor,
};
use poqka_core::lwe::hellinger;
use poqka_core::profile::ParamProfile;
use poqka_core::protocol::{
    replay_verdict, run_sessions, ChallengeType, NonZeroEqSet, ProtocolId, RejectReason, Response, SessionSeeds,
};
use poqka_core::provers::{PreimageRule, Strategy};
use poqka_core::stats::{rank_deficiency_rate, Density};
use poqka_wire::{MsgType, VerdictMsg, WireMessage};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Reference SHA-256 digests of serializations under fixed seeds.
#[derive(Clone, Copy, Debug)]
pub struct Goldens {
    pub ddh: &'static str,
    pub lwe: &'static str,
    pub response: &'static str,
    pub frame: &'static str,
}

impl Goldens {
    pub const BUILT_IN: Goldens = Goldens {
        ddh: "be6b44d2901460f98312a7e3ef80e470777140c0c1a18361460bce4efc9442ac",
        lwe: "585de7d16ff6312f108bb594ce815a8a47ebb2d987c02e4622f15de5d0dfc7fd",
        response: "404f17d6e2c32c51764a4d184823523c2f482b4add7f98e028391af18f4895d4",
        frame: "e7439502a1899646a1f1d6ea8f2651639d69374523abf50e330d13194d63a922",
    };
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub checks: Vec<Check>,
    pub failed_modules: Vec<&'static str>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `{module: {check: "PASS detail"}}`, sorted, for reports.
    pub fn to_value(&self) -> serde_json::Value {
        let mut modules: BTreeMap<&str, BTreeMap<&str, String>> = BTreeMap::new();
        for c in &self.checks {
            let line = format!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.detail);
            modules.entry(c.module).or_default().insert(c.name, line);
        }
        serde_json::json!({ "checks": modules, "failed_modules": self.failed_modules })
    }
}

struct Recorder(Vec<Check>);

impl Recorder {
    fn check(&mut self, module: &'static str, name: &'static str, pass: bool, detail: impl Into<String>) {
        self.0.push(Check { module, name, pass, detail: detail.into() });
    }
}

/// Runs every check. The profile is used for the structural checks and the
/// seed drives the sampled ones; digests are always taken on the toy
/// profile.
pub fn run(profile: &ParamProfile, seed: &Seed, goldens: &Goldens) -> Summary {
    let mut r = Recorder(Vec::new());
    let ddh = ProtocolId::ThreeTest.default_suite(profile);
    let lwe = ProtocolId::TwoTest.default_suite(profile);
    let toy = ParamProfile::toy().expect("built-in profile");
    algebra(&mut r);
    ddh_families(&mut r, &ddh);
    golden(&mut r, "ddh_families", family_digest(&ProtocolId::ThreeTest.default_suite(&toy), "selftest-ddh-golden"), goldens.ddh);
    lwe_families(&mut r, &lwe, seed);
    golden(&mut r, "lwe_families", family_digest(&ProtocolId::TwoTest.default_suite(&toy), "selftest-lwe-golden"), goldens.lwe);
    protocol_core(&mut r, &ddh, &lwe, seed);
    golden(&mut r, "protocol_core", response_digest(&ProtocolId::ThreeTest.default_suite(&toy)), goldens.response);
    provers(&mut r, &ddh);
    games(&mut r, &ddh, profile, seed);
    stats(&mut r, seed);
    wire(&mut r, goldens);
    let mut failed_modules: Vec<&'static str> = r.0.iter().filter(|c| !c.pass).map(|c| c.module).collect();
    failed_modules.dedup();
    Summary { checks: r.0, failed_modules }
}

fn digest(parts: &[Vec<u8>]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_be_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

fn golden(r: &mut Recorder, module: &'static str, got: String, want: &str) {
    let pass = got == want;
    let detail = if pass { got } else { format!("serialization digest {got} != {want}") };
    r.check(module, "serialization digest", pass, detail);
}

fn algebra(r: &mut Recorder) {
    let mut ok = true;
    for a in 0..8u64 {
        for b in 0..8u64 {
            let bits = binary_encode_j(&[a, b], 3).expect("fits");
            ok &= binary_decode_j(&bits, 3).ok() == Some(vec![a, b]);
        }
    }
    r.check("algebra", "J encode/decode round trip", ok, "64 points at width 3");
}

/// Every point of `{0,1} × X`.
fn all_points(suite: &Suite) -> Vec<DomainPoint> {
    let (n, d) = (suite.n(), suite.domain_bound());
    let total = d.pow(n as u32);
    let mut out = Vec::new();
    for b in 0..2 {
        for idx in 0..total {
            out.push(DomainPoint::new(b, (0..n as u32).map(|i| idx / d.pow(i) % d).collect()));
        }
    }
    out
}

fn image_bytes(y: &Image) -> Vec<u8> {
    let mut w = Writer::new();
    y.encode_into(&mut w);
    w.finish()
}

fn ddh_families(r: &mut Recorder, suite: &Suite) {
    const M: &str = "ddh_families";
    let enumerable = suite.domain_bound().checked_pow(suite.n() as u32).is_some_and(|t| t <= 1 << 16);
    if !enumerable {
        r.check(M, "exhaustive claw structure", true, "skipped: domain too large for enumeration");
    } else {
        let mut zero = CoinTape::new([0; 32]);
        let (key, trap) = suite.generate(Role::F, &mut derived_rng(&[1; 32], "selftest-ddh", 0)).expect("keygen");
        let s = trap.claw_shift().expect("F trapdoor").to_vec();
        let points = all_points(suite);
        let mut images: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut inverted = true;
        for p in &points {
            let y = key.eval(p, &mut zero).expect("in range");
            inverted &= trap.invert_branch(p.b as u8, &y).ok().as_ref() == Some(&p.x);
            *images.entry(image_bytes(&y)).or_default() += 1;
        }
        let mut claws = 0;
        let mut claw_ok = true;
        for p in points.iter().filter(|p| p.b == 0 && suite.in_xb(0, &p.x)) {
            let partner: Vec<u64> = p.x.iter().zip(&s).map(|(&x, &s)| x - s as u64).collect();
            let y0 = key.eval(p, &mut zero).expect("in range");
            let y1 = key.eval(&DomainPoint::new(1, partner), &mut zero).expect("in range");
            claw_ok &= y0 == y1 && images[&image_bytes(&y0)] == 2;
            claws += 1;
        }
        r.check(M, "exhaustive claw structure", claw_ok, format!("{claws} points of X_0, each with exactly two preimages"));
        r.check(M, "exhaustive F inversion", inverted, format!("{} points", points.len()));

        let (gkey, gtrap) = suite.generate(Role::G, &mut derived_rng(&[1; 32], "selftest-ddh", 1)).expect("keygen");
        let g_ok = points.iter().all(|p| {
            let y = gkey.eval(p, &mut zero).expect("in range");
            gtrap.invert_injective(&y).ok().as_ref() == Some(p)
        });
        r.check(M, "exhaustive G inversion", g_ok, format!("{} points", points.len()));
    }
}

fn family_digest(suite: &Suite, label: &str) -> String {
    let mut parts = Vec::new();
    for (i, role) in [Role::F, Role::G, Role::H].into_iter().enumerate() {
        if suite.supports(role) {
            let (k, t): (FamilyKey, FamilyTrapdoor) =
                suite.generate(role, &mut derived_rng(&[2; 32], label, i as u64)).expect("keygen");
            parts.push(k.encode());
            parts.push(t.encode());
        }
    }
    digest(&parts)
}

fn lwe_families(r: &mut Recorder, suite: &Suite, seed: &Seed) {
    const M: &str = "lwe_families";
    let trials = 200;
    let (fkey, ftrap) = suite.generate(Role::F, &mut derived_rng(seed, "selftest-lwe", 0)).expect("keygen");
    let (gkey, gtrap) = suite.generate(Role::G, &mut derived_rng(seed, "selftest-lwe", 1)).expect("keygen");
    let mut tape = CoinTape::derived(seed, "selftest-lwe-points", 0);
    let mut f_ok = 0;
    let mut g_ok = 0;
    for _ in 0..trials {
        let p = PreimageRule::FullDomain.draw(suite, &mut tape).expect("live tape");
        let y = fkey.eval(&p, &mut tape).expect("in range");
        f_ok += (ftrap.invert_branch(p.b as u8, &y).ok().as_ref() == Some(&p.x)) as usize;
        let y = gkey.eval(&p, &mut tape).expect("in range");
        g_ok += (gtrap.invert_injective(&y).ok().as_ref() == Some(&p)) as usize;
    }
    r.check(M, "sampled F inversion", f_ok == trials, format!("{f_ok}/{trials}"));
    r.check(M, "sampled G inversion", g_ok == trials, format!("{g_ok}/{trials}"));
}

fn protocol_core(r: &mut Recorder, ddh: &Suite, lwe: &Suite, seed: &Seed) {
    const M: &str = "protocol_core";
    let codes = RejectReason::ALL.iter().all(|&x| RejectReason::from_code(x.code()) == Some(x))
        && (1..=6).all(|c| ChallengeType::from_code(c).map(ChallengeType::code) == Some(c));
    r.check(M, "reason and challenge codes", codes, "8 reasons, 6 challenge types");

    let mut replays = true;
    for (protocol, suite) in [(ProtocolId::ThreeTest, ddh), (ProtocolId::TwoTest, lwe)] {
        let ts = run_sessions(protocol, suite, &Strategy::classical_canonical(), 100, seed).expect("sessions");
        for t in &ts {
            let v = replay_verdict(protocol, suite, &SessionSeeds::batch(seed, t.session_index), &t.response, &NonZeroEqSet);
            replays &= v.ok() == Some(t.verdict());
        }
    }
    r.check(M, "verdicts replay from transcripts", replays, "100 sessions each for protocols 3 and 4");

    let resp = fixed_response(ddh);
    let bytes = resp.encode();
    let round = Response::decode(ddh, &bytes).ok() == Some(resp);
    r.check(M, "response round trip", round, format!("{} bytes", bytes.len()));
}

fn fixed_response(suite: &Suite) -> Response {
    let (key, _) = suite.generate(Role::F, &mut derived_rng(&[3; 32], "selftest-response", 0)).expect("keygen");
    Strategy::classical_canonical().respond(suite, &key, None, &mut CoinTape::new([4; 32])).expect("classical")
}

fn response_digest(suite: &Suite) -> String {
    digest(&[fixed_response(suite).encode()])
}

fn provers(r: &mut Recorder, suite: &Suite) {
    const M: &str = "provers";
    let (key, trap) = suite.generate(Role::F, &mut derived_rng(&[5; 32], "selftest-provers", 0)).expect("keygen");
    let deterministic = Strategy::NAMES.iter().all(|name| {
        let s = Strategy::by_name(name).expect("listed");
        let a = s.respond(suite, &key, Some(&trap), &mut CoinTape::new([6; 32])).map(|x| x.encode());
        let b = s.respond(suite, &key, Some(&trap), &mut CoinTape::new([6; 32])).map(|x| x.encode());
        a.is_ok() && a == b
    });
    r.check(M, "strategies replay from their tapes", deterministic, format!("{} strategies", Strategy::NAMES.len()));
    let mut tape = CoinTape::new([7; 32]);
    let _ = Strategy::honest_device().respond(suite, &key, Some(&trap), &mut tape);
    r.check(M, "honest device keeps off the shared tape", tape.cursor() == 0, format!("cursor {}", tape.cursor()));
}

fn games(r: &mut Recorder, suite: &Suite, profile: &ParamProfile, seed: &Seed) {
    const M: &str = "extraction_games";
    let lk = LkParams::toy();
    let runs = [
        (run_lk_experiment(&FarAdversary, &ZeroLkExtractor, &lk, 20, seed), "far"),
        (run_lk_experiment(&PerturbAdversary::default(), &EchoLkExtractor, &lk, 20, seed), "not_in_lattice"),
        (run_lk_experiment(&PerturbAdversary::default(), &ZeroLkExtractor, &lk, 20, seed), "too_far"),
        (run_lk_experiment(&PerturbAdversary::default(), &TapeLkExtractor, &lk, 20, seed), "completed"),
        (run_kea_experiment(&RandomPairAdversary, &TapeKeaExtractor, profile.ddh(), 20, seed), "unpaired"),
        (run_kea_experiment(&ExponentiationAdversary, &TapeKeaExtractor, profile.ddh(), 20, seed), "extracted"),
        (run_kea_experiment(&ExponentiationAdversary, &ZeroKeaExtractor, profile.ddh(), 20, seed), "kea_failure"),
    ];
    let mut missing = Vec::new();
    for (report, branch) in &runs {
        if !report.as_ref().is_ok_and(|rep| rep.reason(branch) > 0) {
            missing.push(*branch);
        }
    }
    let detail = if missing.is_empty() { "all 7 branches reached".to_string() } else { format!("unreached {missing:?}") };
    r.check(M, "knowledge game branch coverage", missing.is_empty(), detail);

    let adv = build_adversary_b(Strategy::classical_canonical(), CanonicalExtractor::default());
    let mut seen = [false; 3];
    for i in 0..100 {
        let (key, trap) = suite.generate(Role::F, &mut derived_rng(seed, "selftest-ahcb", i)).expect("keygen");
        let t: AhcbTuple = adv.run(suite, &key, &trap, [i as u8; 32]);
        match hk_membership(suite, &trap, &t, &NonZeroEqSet) {
            HkMembership::InH => seen[0] = true,
            HkMembership::InHbar => seen[1] = true,
            HkMembership::Neither => seen[2] = true,
        }
        // x = 0 lies outside X_0, so no claw can be completed
        let outside = AhcbTuple { b: 0, x: vec![0; suite.n()], ..t };
        seen[2] |= hk_membership(suite, &trap, &outside, &NonZeroEqSet) == HkMembership::Neither;
    }
    let names = ["InH", "InHbar", "Neither"];
    let reached: Vec<&str> = names.iter().zip(seen).filter(|(_, s)| *s).map(|(n, _)| *n).collect();
    r.check(M, "AHCB membership branch coverage", seen.iter().all(|&s| s), format!("reached {reached:?}"));
}

fn stats(r: &mut Recorder, seed: &Seed) {
    const M: &str = "stats";
    let rate = rank_deficiency_rate(2, 2, 2, 1 << 10, &mut derived_rng(seed, "selftest-rank", 0));
    let exact = rate.as_ref().is_ok_and(|e| e.trials == 16 && e.successes == 10);
    let detail = match &rate {
        Ok(e) => format!("{}/{} deficient", e.successes, e.trials),
        Err(e) => e.to_string(),
    };
    r.check(M, "rank deficiency of 2x2 over Z_2", exact, detail);
    let d = Density::from_masses([(0i64, 0.5), (1, 0.5)]);
    let e = Density::from_masses([(2i64, 1.0)]);
    let h_same = hellinger(&d, &d).unwrap_or(f64::NAN);
    let h_disjoint = hellinger(&d, &e).unwrap_or(f64::NAN);
    r.check(M, "hellinger identity and disjointness", h_same.abs() < 1e-12 && (h_disjoint - 1.0).abs() < 1e-12, format!("{h_same} {h_disjoint}"));
}

fn wire(r: &mut Recorder, goldens: &Goldens) {
    const M: &str = "wire_service";
    let frame = VerdictMsg { verdict: poqka_core::protocol::Verdict::Accept, challenge: ChallengeType::Eq }.to_frame();
    let bytes = frame.encode().expect("small frame");
    let round = WireMessage::decode(&bytes).ok() == Some(frame) && bytes[5] == MsgType::Verdict as u8;
    r.check(M, "frame round trip", round, format!("{} bytes", bytes.len()));
    golden(r, M, digest(&[bytes]), goldens.frame);
}
