use super::*;
use crate::family::Role;
use crate::profile::ParamProfile;
use crate::protocol::{run_sessions, verify_eq, NonZeroEqSet, ProtocolId, SessionTally};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn toy() -> ParamProfile {
    ParamProfile::toy().unwrap()
}

fn ddh_suite() -> Suite {
    ProtocolId::ThreeTest.default_suite(&toy())
}

#[test]
fn rules_stay_in_their_regions() {
    let suite = ddh_suite();
    let mut tape = CoinTape::new([1; 32]);
    for _ in 0..500 {
        let p = PreimageRule::Overlap.draw(&suite, &mut tape).unwrap();
        assert!(p.b <= 1 && suite.in_xb(0, &p.x) && suite.in_xb(1, &p.x));
        let p = PreimageRule::FullDomain.draw(&suite, &mut tape).unwrap();
        assert!(suite.in_restricted(&p));
        let p = PreimageRule::ExtendedBranch.draw(&suite, &mut tape).unwrap();
        assert!(p.b >= 2 && p.b < suite.modulus() && suite.in_domain(&p.x));
    }
}

#[test]
fn honest_device_answers_every_claw_correctly() {
    // exhaustive over the toy domain: whenever a partner exists the equation bit is right
    let suite = ddh_suite();
    let (key, trap) = suite.generate(Role::F, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    let d_max = suite.domain_bound();
    let mut checked = 0;
    for b in 0..2u8 {
        for x0 in 0..d_max {
            for x1 in 0..d_max {
                let x = vec![x0, x1];
                let Some((_, partner)) = trap.claw_partner(b, &x) else { continue };
                if !suite.in_xb(b, &x) || !suite.in_xb(b ^ 1, &partner) {
                    continue;
                }
                let y = key.eval(&DomainPoint::new(b as u64, x.clone()), &mut CoinTape::new([0; 32])).unwrap();
                for seed in 0..4u8 {
                    let mut tape = CoinTape::new([seed; 32]);
                    let d = draw_nonzero_d(suite.w(), &mut tape).unwrap();
                    let (x0v, x1v) = if b == 0 { (&x, &partner) } else { (&partner, &x) };
                    let c = equation_bit(&suite, x0v, x1v, &d);
                    let resp = Response { y: y.clone(), d, c };
                    assert!(verify_eq(&suite, &key, &trap, &resp, &NonZeroEqSet).accepted());
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn honest_device_leaves_the_tape_untouched() {
    let suite = ddh_suite();
    let (key, trap) = suite.generate(Role::F, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
    let mut tape = CoinTape::new([4; 32]);
    let a = HonestDevice.respond(&suite, &key, &trap, &mut tape);
    assert_eq!(tape.cursor(), 0);
    let b = HonestDevice.respond(&suite, &key, &trap, &mut CoinTape::new([4; 32]));
    assert_eq!(a, b);
}

#[test]
fn strategies_replay_byte_for_byte() {
    let suite = ddh_suite();
    let (key, trap) = suite.generate(Role::G, &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
    for name in Strategy::NAMES {
        let s = Strategy::by_name(name).unwrap();
        let a = s.respond(&suite, &key, Some(&trap), &mut CoinTape::new([6; 32])).unwrap().encode();
        let b = s.respond(&suite, &key, Some(&trap), &mut CoinTape::new([6; 32])).unwrap().encode();
        assert_eq!(a, b, "{name}");
    }
    assert!(Strategy::by_name("oracle").is_none());
    assert!(Strategy::honest_device().needs_trapdoor());
    assert!(!Strategy::classical_canonical().needs_trapdoor());
}

#[test]
fn classical_canonical_preimage_is_on_the_tape() {
    let suite = ddh_suite();
    let (key, trap) = suite.generate(Role::F, &mut ChaCha20Rng::seed_from_u64(7)).unwrap();
    let mut tape = CoinTape::new([8; 32]);
    let resp = ClassicalCanonical.respond(&suite, &key, &mut tape);
    let p = PreimageRule::Overlap.draw(&suite, &mut tape.recorded()).unwrap();
    assert!(key.chk(&resp.y, &p));
    assert!(trap.claw_partner(p.b as u8, &p.x).is_some());
    assert!(!resp.d.is_zero());
}

#[test]
fn random_noise_is_well_formed_and_rejected() {
    let suite = ddh_suite();
    let noise = Strategy::by_name("random_noise_prover").unwrap();
    let ts = run_sessions(ProtocolId::ThreeTest, &suite, &noise, 600, &[9; 32]).unwrap();
    let tally = SessionTally::from_transcripts(&ts);
    assert!(tally.overall.estimate <= 0.01, "{}", tally.overall.estimate);
    assert!(!tally.reasons.contains_key("FormatError"));
}

#[test]
fn extended_prober_is_separated_by_the_image_tests() {
    let suite = ddh_suite();
    let prober = Strategy::by_name("extended_domain_prober").unwrap();
    let ts = run_sessions(ProtocolId::ThreeTest, &suite, &prober, 600, &[10; 32]).unwrap();
    let tally = SessionTally::from_transcripts(&ts);
    assert_eq!(tally.per_type["sIm"].successes, 0);
    assert_eq!(tally.per_type["wIm"].successes, tally.per_type["wIm"].trials);
}

#[test]
fn simulators_refuse_to_run_without_an_oracle() {
    let suite = ddh_suite();
    let (key, _) = suite.generate(Role::F, &mut ChaCha20Rng::seed_from_u64(11)).unwrap();
    let err = Strategy::honest_device().respond(&suite, &key, None, &mut CoinTape::new([0; 32]));
    assert!(matches!(err, Err(ProtocolError::ProverProtocolViolation(_))));
    assert!(Strategy::classical_canonical().respond(&suite, &key, None, &mut CoinTape::new([0; 32])).is_ok());
}
