//! Exit gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use poqka_core::codec::Writer;
use poqka_core::coins::{derived_rng, CoinTape, Seed};
use poqka_core::family::{DomainPoint, Image, Role, Suite};
use poqka_core::games::{
    build_adversary_b, run_ahcb_game, run_kea_experiment, run_lk_experiment, CanonicalExtractor,
    ExponentiationAdversary, LkParams, PerturbAdversary, TapeKeaExtractor, TapeLkExtractor, ZeroLkExtractor,
};
use poqka_core::lwe::{expected_branch_hellinger, hellinger, NoiseKind};
use poqka_core::parallel::map_trials;
use poqka_core::profile::ParamProfile;
use poqka_core::protocol::{
    run_session, run_sessions, verify_sim, verify_wim, NonZeroEqSet, ProtocolId, SessionSeeds, SessionTally,
    Transcript,
};
use poqka_core::provers::{PreimageRule, Strategy};
use poqka_core::stats::{modmat_bias_probe, rank_deficiency_rate, Density};
use poqka_wire::{
    client_run_captured, serve, ChallengeMsg, ClientConfig, SeedReplayOracle, ServiceConfig, WireMessage,
};
use rand::Rng;

const TOL: f64 = 0.02;

struct Ctx {
    toy: ParamProfile,
    mid: ParamProfile,
}

type Outcome = (bool, String);

fn main() {
    let ctx = Ctx { toy: ParamProfile::toy().expect("toy profile"), mid: ParamProfile::mid().expect("mid profile") };
    let criteria: [(&str, Duration, fn(&Ctx) -> Outcome); 10] = [
        ("claw structure", secs(10), claw_structure),
        ("inversion round-trips", secs(60), inversion),
        ("completeness constants", secs(600), completeness),
        ("soundness-bound witnesses", secs(600), soundness),
        ("image-test discrimination", secs(120), image_tests),
        ("AHCB game mechanics", secs(300), ahcb),
        ("knowledge-game harnesses", secs(300), knowledge_games),
        ("statistical lemmas", secs(300), statistical_lemmas),
        ("Hellinger/TV diagnostics", secs(60), diagnostics),
        ("wire equivalence", secs(300), wire_equivalence),
    ];
    let mut failures = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = run(&ctx);
        let took = t.elapsed();
        let pass = ok && took <= *budget;
        failures += !pass as usize;
        println!(
            "{} criterion {}: {name}: {detail} [{:.1}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn root(label: &str) -> Seed {
    poqka_core::coins::derive_seed(&[0xac; 32], label, 0)
}

fn image_key(y: &Image) -> Vec<u8> {
    let mut w = Writer::new();
    y.encode_into(&mut w);
    w.finish()
}

fn all_points(suite: &Suite) -> Vec<DomainPoint> {
    let (n, d) = (suite.n() as u32, suite.domain_bound());
    (0..2)
        .flat_map(|b| (0..d.pow(n)).map(move |idx| DomainPoint::new(b, (0..n).map(|i| idx / d.pow(i) % d).collect())))
        .collect()
}

fn claw_structure(ctx: &Ctx) -> Outcome {
    let suite = ProtocolId::ThreeTest.default_suite(&ctx.toy);
    let q = suite.modulus();
    if (suite.n(), suite.domain_bound()) != (2, 4) || q > 1 << 16 {
        return (false, format!("toy profile is not n=2, d=4, q<=2^16 (q={q})"));
    }
    let points = all_points(&suite);
    let mut zero = CoinTape::new([0; 32]);
    let (mut claws, mut good, keys) = (0u64, 0u64, 50);
    for k in 0..keys {
        let (key, trap) = suite.generate(Role::F, &mut derived_rng(&root("c1"), "key", k)).expect("keygen");
        let s = trap.claw_shift().expect("F trapdoor");
        let mut preimages: HashMap<Vec<u8>, usize> = HashMap::new();
        for p in &points {
            *preimages.entry(image_key(&key.eval(p, &mut zero).expect("in range"))).or_default() += 1;
        }
        for p in points.iter().filter(|p| p.b == 0 && suite.in_xb(0, &p.x)) {
            let shifted: Vec<u64> = p.x.iter().zip(s).map(|(&x, &s)| x - s as u64).collect();
            let y0 = key.eval(p, &mut zero).expect("in range");
            let y1 = key.eval(&DomainPoint::new(1, shifted), &mut zero).expect("in range");
            claws += 1;
            good += (y0 == y1 && preimages[&image_key(&y0)] == 2) as u64;
        }
    }
    (claws > 0 && good == claws, format!("{good}/{claws} points of X_0 over {keys} keys (q={q})"))
}

fn round_trips(suite: &Suite, points: &[DomainPoint], seed: &Seed, keys: u64) -> (u64, u64) {
    let mut ok = 0;
    let mut total = 0;
    let mut tape = CoinTape::derived(seed, "noise", 0);
    for k in 0..keys {
        let (fk, ft) = suite.generate(Role::F, &mut derived_rng(seed, "f", k)).expect("keygen");
        let (gk, gt) = suite.generate(Role::G, &mut derived_rng(seed, "g", k)).expect("keygen");
        for p in points {
            let y = fk.eval(p, &mut tape).expect("in range");
            ok += (ft.invert_branch(p.b as u8, &y).ok().as_ref() == Some(&p.x)) as u64;
            let y = gk.eval(p, &mut tape).expect("in range");
            ok += (gt.invert_injective(&y).ok().as_ref() == Some(p)) as u64;
            total += 2;
        }
    }
    (ok, total)
}

fn sampled_points(suite: &Suite, count: usize, seed: &Seed) -> Vec<DomainPoint> {
    let mut tape = CoinTape::derived(seed, "points", 0);
    (0..count).map(|_| PreimageRule::FullDomain.draw(suite, &mut tape).expect("live tape")).collect()
}

fn inversion(ctx: &Ctx) -> Outcome {
    let ddh_toy = ProtocolId::ThreeTest.default_suite(&ctx.toy);
    let lwe_toy = ProtocolId::TwoTest.default_suite(&ctx.toy);
    let ddh_mid = ProtocolId::ThreeTest.default_suite(&ctx.mid);
    let lwe_mid = ProtocolId::TwoTest.default_suite(&ctx.mid);
    let seed = root("c2");
    let parts = [
        ("ddh toy exhaustive", round_trips(&ddh_toy, &all_points(&ddh_toy), &seed, 10)),
        ("lwe toy", round_trips(&lwe_toy, &sampled_points(&lwe_toy, 1000, &seed), &seed, 1)),
        ("ddh mid", round_trips(&ddh_mid, &sampled_points(&ddh_mid, 1000, &seed), &seed, 1)),
        ("lwe mid", round_trips(&lwe_mid, &sampled_points(&lwe_mid, 1000, &seed), &seed, 1)),
    ];
    let pass = parts.iter().all(|(_, (ok, n))| ok == n);
    let detail = parts.iter().map(|(name, (ok, n))| format!("{name} {ok}/{n}")).collect::<Vec<_>>().join(", ");
    (pass, detail)
}

fn tally(protocol: ProtocolId, profile: &ParamProfile, strategy: &Strategy, trials: usize, label: &str) -> SessionTally {
    let suite = protocol.default_suite(profile);
    SessionTally::from_transcripts(&run_sessions(protocol, &suite, strategy, trials, &root(label)).expect("sessions"))
}

fn completeness(ctx: &Ctx) -> Outcome {
    let ddh = ctx.toy.ddh();
    let target3 = (2.0 + (1.0 - 2.0 / ddh.d() as f64).powi(ddh.n() as i32)) / 3.0;
    let p3 = tally(ProtocolId::ThreeTest, &ctx.toy, &Strategy::honest_device(), 10_000, "c3/p3").overall;
    let p4 = tally(ProtocolId::TwoTest, &ctx.toy, &Strategy::honest_device(), 10_000, "c3/p4").overall;
    let pass = p3.estimate >= target3 - TOL && p4.estimate >= 0.98;
    (pass, format!("protocol 3 {:.4} >= {:.4}, protocol 4 {:.4} >= 0.98", p3.estimate, target3 - TOL, p4.estimate))
}

fn soundness(ctx: &Ctx) -> Outcome {
    let c = Strategy::classical_canonical();
    let p3 = tally(ProtocolId::ThreeTest, &ctx.toy, &c, 30_000, "c4/p3").overall.estimate;
    let p4 = tally(ProtocolId::TwoTest, &ctx.toy, &c, 20_000, "c4/p4").overall.estimate;
    let pass = (p3 - 5.0 / 6.0).abs() <= TOL && (p4 - 0.75).abs() <= TOL;
    (pass, format!("protocol 3 {p3:.4} vs 5/6, protocol 4 {p4:.4} vs 3/4"))
}

fn image_tests(ctx: &Ctx) -> Outcome {
    let suite = ProtocolId::ThreeTest.default_suite(&ctx.toy);
    let prober = Strategy::by_name("extended_domain_prober").expect("built-in");
    let seed = root("c5");
    let trials = 10_000;
    let run = |role: Role| -> usize {
        map_trials(trials, |i| {
            let (key, trap) = suite.generate(role, &mut derived_rng(&seed, "key", i as u64)).expect("keygen");
            let view = suite.decode_key(&key.encode_blind(), Role::F).expect("decodes");
            let mut tape = CoinTape::derived(&seed, "prover", i as u64);
            let resp = prober.respond(&suite, &view, None, &mut tape).expect("classical");
            match role {
                Role::G => verify_sim(&suite, &key, &trap, &resp).accepted(),
                _ => verify_wim(&suite, &trap, &resp).accepted(),
            }
        })
        .into_iter()
        .filter(|&a| a)
        .count()
    };
    let sim_accepts = run(Role::G);
    let wim_accepts = run(Role::H);
    let pass = sim_accepts == 0 && wim_accepts == trials;
    (pass, format!("sIm rejects {}/{trials}, wIm accepts {wim_accepts}/{trials}", trials - sim_accepts))
}

fn ahcb(ctx: &Ctx) -> Outcome {
    let suite = ProtocolId::ThreeTest.default_suite(&ctx.toy);
    let ddh = ctx.toy.ddh();
    let floor = (1.0 - 2.0 / ddh.d() as f64).powi(ddh.n() as i32) - TOL;
    let canonical = build_adversary_b(Strategy::classical_canonical(), CanonicalExtractor::default());
    let a = run_ahcb_game(&suite, &canonical, 10_000, &root("c6/canonical")).expect("game").rate;
    let cheater = Strategy::by_name("trapdoor_cheater").expect("built-in");
    let cheater = build_adversary_b(cheater, CanonicalExtractor::new(PreimageRule::FullDomain));
    let b = run_ahcb_game(&suite, &cheater, 10_000, &root("c6/cheater")).expect("game").rate;
    let pass = (a - 0.5).abs() <= TOL && b >= floor;
    (pass, format!("canonical {a:.4} vs 0.5, cheater {b:.4} >= {floor:.4}"))
}

fn knowledge_games(ctx: &Ctx) -> Outcome {
    let kea = run_kea_experiment(&ExponentiationAdversary, &TapeKeaExtractor, ctx.toy.ddh(), 10_000, &root("c7/kea")).expect("kea");
    let lk = LkParams::toy();
    let perturb = PerturbAdversary::default();
    let tape = run_lk_experiment(&perturb, &TapeLkExtractor, &lk, 10_000, &root("c7/lk")).expect("lk");
    let zero = run_lk_experiment(&perturb, &ZeroLkExtractor, &lk, 10_000, &root("c7/zero")).expect("lk");
    let pass = kea.wins == 0 && tape.wins == 0 && zero.rate >= 0.99;
    let detail = format!(
        "KEA failures {}/{}, LK perturb+tape {}/{}, LK zero extractor {:.4}",
        kea.wins, kea.trials, tape.wins, tape.trials, zero.rate
    );
    (pass, detail)
}

fn statistical_lemmas(_: &Ctx) -> Outcome {
    let rank = rank_deficiency_rate(2, 2, 2, 1 << 10, &mut derived_rng(&root("c8"), "rank", 0)).expect("rank");
    let bias = modmat_bias_probe(3, 1, 120, 100_000, &mut derived_rng(&root("c8"), "bias", 0)).expect("bias");
    let exact = rank.trials == 16 && rank.successes == 10;
    let pass = exact && bias.max_bias <= 0.05;
    (pass, format!("rank deficiency {}/{} = {}, max bias {:.4}", rank.successes, rank.trials, rank.estimate, bias.max_bias))
}

fn diagnostics(_: &Ctx) -> Outcome {
    let d = Density::from_masses([(0i64, 0.25), (1, 0.25), (2, 0.5)]);
    let e = Density::from_masses([(5i64, 0.5), (6, 0.5)]);
    let same = hellinger(&d, &d).expect("normalized");
    let disjoint = hellinger(&d, &e).expect("normalized");
    let b_v = 4;
    let h: Vec<f64> = [2u64, 8, 32].iter().map(|r| expected_branch_hellinger(r * b_v, b_v, NoiseKind::TruncatedGaussian)).collect();
    let pass = same == 0.0 && disjoint == 1.0 && h[0] > h[1] && h[1] > h[2];
    (pass, format!("H(D,D)={same}, disjoint={disjoint}, E H^2 at B_P/B_V = 2, 8, 32: {:.5} > {:.5} > {:.5}", h[0], h[1], h[2]))
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

fn wire_equivalence(ctx: &Ctx) -> Outcome {
    let seed = root("c10");
    let protocol = ProtocolId::ThreeTest;
    let mut cfg = ServiceConfig::new("toy", protocol);
    cfg.port = 0;
    cfg.seed = Some(hex::encode(seed));
    let server = serve(&cfg).expect("service starts");
    let addr = server.local_addr().to_string();
    let suite = protocol.default_suite(&ctx.toy);
    let oracle = SeedReplayOracle::new(seed);
    let client = ClientConfig::new(ctx.toy.clone(), protocol, Strategy::honest_device(), seed).with_oracle(oracle.clone());

    let sessions = 1000;
    let (mut same, mut leaks, mut frames) = (0, 0, 0);
    for _ in 0..sessions {
        let run = client_run_captured(&addr, &client).expect("session");
        let t: &Transcript = &run.transcript;
        let local = run_session(protocol, &suite, &Strategy::honest_device(), &SessionSeeds::batch(&seed, t.session_index), &NonZeroEqSet)
            .expect("in-process session");
        same += (t.verdict() == local.verdict() && t.challenge == local.challenge && t.response == local.response) as usize;

        let ch = ChallengeMsg::from_frame(&WireMessage::decode(&run.received[0]).expect("frame")).expect("challenge");
        let trap = oracle.trapdoor(protocol, &suite, ch.index, &ch.key).expect("known session").encode();
        let public = suite.decode_key(&ch.key, Role::F).map(|k| k.encode()).unwrap_or_default();
        let canaries: Vec<&[u8]> = trap.windows(24).filter(|w| !contains(&public, w) && w.iter().any(|&b| b != w[0])).collect();
        for f in &run.received {
            frames += 1;
            leaks += canaries.iter().any(|c| contains(f, c)) as usize;
        }
    }
    server.shutdown().expect("clean shutdown");

    let mut rng = derived_rng(&seed, "fuzz", 0);
    let fuzz_ok = (0..1000)
        .filter(|_| {
            let len = rng.gen_range(0..4096);
            let m = WireMessage { msg_type: rng.gen(), payload: (0..len).map(|_| rng.gen()).collect() };
            let bytes = m.encode().expect("small frame");
            WireMessage::decode(&bytes).is_ok_and(|back| back == m && back.encode().ok() == Some(bytes))
        })
        .count();
    let pass = same == sessions && leaks == 0 && fuzz_ok == 1000;
    (pass, format!("verdicts identical {same}/{sessions}, canary leaks {leaks} over {frames} frames, fuzz {fuzz_ok}/1000"))
}
