use std::time::Instant;

use anyhow::{bail, Context, Result};
use poqka_core::coins::{derived_rng, Seed};
use poqka_core::family::{Role, Suite};
use poqka_core::games::{
    build_adversary_b, estimate_extraction_rate, run_ahcb_game, run_kea_experiment, run_lk_experiment,
    CanonicalExtractor, EchoLkExtractor, ExponentiationAdversary, FarAdversary, GameReport, LkParams,
    PerturbAdversary, TapeKeaExtractor, TapeLkExtractor, ZeroKeaExtractor, ZeroLkExtractor,
};
use poqka_core::parallel::{map_trials, map_trials_sequential};
use poqka_core::profile::ParamProfile;
use poqka_core::protocol::{run_session, run_sessions, NonZeroEqSet, ProtocolId, SessionSeeds, SessionTally};
use poqka_core::provers::{PreimageRule, Strategy};
use poqka_wire::{client_run, serve, ClientConfig, SeedReplayOracle, ServiceConfig};
use serde_json::{json, Value};

use crate::{ensure_single_round, parse_seed, selftest, Cli, CliError, Command, Common, Report, SLACK};

pub(crate) fn dispatch(cli: &Cli) -> Result<Report> {
    let c = &cli.common;
    match &cli.command {
        Command::Keygen { role } => keygen(c, role),
        Command::Run { connect, verifier_seed } => run(c, connect.as_deref(), verifier_seed.as_deref()),
        Command::Serve { .. } => {
            let config = service_config(cli)?;
            let handle = serve(&config)?;
            eprintln!("poqka {} listening on {}", crate::BUILD_ID, handle.local_addr());
            let logged = handle.wait()?;
            let seed = config.root_seed()?;
            Ok(Report::new("serve", &config.profile, Some(config.protocol.number()), &seed, json!({ "sessions": logged })))
        }
        Command::Bench => bench(c),
        Command::SoundnessSim => soundness(c),
        Command::CompletenessSim => completeness(c),
        Command::Games { game } => games(c, game),
        Command::Selftest => {
            let seed = c.seed_or_default()?;
            let summary = selftest::run(&c.load_profile()?, &seed, &selftest::Goldens::BUILT_IN);
            let pass = summary.passed();
            Ok(Report::new("selftest", c.profile_name(), None, &seed, summary.to_value())
                .judged("every module check passes".into(), pass))
        }
    }
}

/// The service config for `serve`: the JSON file if given, with any flags
/// on top.
pub fn service_config(cli: &Cli) -> Result<ServiceConfig> {
    let Command::Serve { config, port, bind, deadline_ms, log } = &cli.command else {
        bail!("not a serve command");
    };
    let c = &cli.common;
    let mut cfg = match config {
        Some(path) => ServiceConfig::load(path)?,
        None => ServiceConfig::new(c.profile_name(), c.protocol_or_default()),
    };
    if let Some(p) = &c.profile {
        cfg.profile = p.clone();
    }
    if let Some(p) = c.protocol {
        cfg.protocol = p;
    }
    if let Some(s) = &c.seed {
        cfg.seed = Some(hex::encode(parse_seed(s)?));
    }
    if let Some(p) = port {
        cfg.port = *p;
    }
    if let Some(b) = bind {
        cfg.bind = b.clone();
    }
    if let Some(d) = deadline_ms {
        cfg.deadline_ms = *d;
    }
    if let Some(l) = log {
        cfg.log_path = Some(l.clone());
    }
    ensure_single_round(cfg.protocol)?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_role(s: &str) -> Result<Role> {
    Ok(match s {
        "F" | "f" => Role::F,
        "G" | "g" => Role::G,
        "H" | "h" => Role::H,
        other => bail!("role must be F, G or H, got `{other}`"),
    })
}

fn suite_for(profile: &ParamProfile, protocol: ProtocolId) -> Suite {
    protocol.default_suite(profile)
}

fn keygen(c: &Common, role: &str) -> Result<Report> {
    let profile = c.load_profile()?;
    let protocol = c.protocol_or_default();
    let seed = c.seed_or_default()?;
    let role = parse_role(role)?;
    let suite = suite_for(&profile, protocol);
    if !suite.supports(role) {
        bail!("the {} suite has no {role:?} family", suite.name());
    }
    let (key, trap) = suite.generate(role, &mut derived_rng(&seed, "keygen", 0))?;
    let body = json!({
        "suite": suite.name(),
        "role": format!("{role:?}"),
        "parameters": profile.summary(),
        "key": hex::encode(key.encode()),
        "key_blind": hex::encode(key.encode_blind()),
        "trapdoor": hex::encode(trap.encode()),
    });
    Ok(Report::new("keygen", profile.name(), Some(protocol.number()), &seed, body))
}

fn run(c: &Common, connect: Option<&str>, verifier_seed: Option<&str>) -> Result<Report> {
    let profile = c.load_profile()?;
    let protocol = c.protocol_or_default();
    let seed = c.seed_or_default()?;
    let strategy = c.strategy_or("honest_device")?;
    let trials = c.trials.unwrap_or(1);
    let transcripts = match connect {
        None => run_sessions(protocol, &suite_for(&profile, protocol), &strategy, trials, &seed)?,
        Some(addr) => {
            ensure_single_round(protocol)?;
            let mut cfg = ClientConfig::new(profile.clone(), protocol, strategy.clone(), seed);
            match verifier_seed {
                Some(v) => cfg = cfg.with_oracle(SeedReplayOracle::new(parse_seed(v)?)),
                None if strategy.needs_trapdoor() => return Err(CliError::StrategyNeedsTrapdoor(strategy.name().into()).into()),
                None => {}
            }
            (0..trials).map(|_| client_run(addr, &cfg)).collect::<Result<Vec<_>, _>>()?
        }
    };
    let tally = SessionTally::from_transcripts(&transcripts);
    let body = json!({ "strategy": strategy.name(), "tally": tally, "transcripts": transcripts });
    Ok(Report::new("run", profile.name(), Some(protocol.number()), &seed, body))
}

fn tally_body(protocol: ProtocolId, suite: &Suite, strategy: &Strategy, trials: usize, seed: &Seed) -> Result<(SessionTally, Value)> {
    let ts = run_sessions(protocol, suite, strategy, trials, seed)?;
    let tally = SessionTally::from_transcripts(&ts);
    let body = json!({
        "suite": suite.name(),
        "strategy": strategy.name(),
        "trials": trials,
        "rate": tally.overall,
        "per_type": tally.per_type,
        "reasons": tally.reasons,
    });
    Ok((tally, body))
}

fn soundness(c: &Common) -> Result<Report> {
    let profile = c.load_profile()?;
    let protocol = c.protocol_or_default();
    let seed = c.seed_or_default()?;
    let strategy = c.strategy_or("classical_canonical")?;
    if strategy.needs_trapdoor() {
        return Err(CliError::StrategyNeedsTrapdoor(strategy.name().into()).into());
    }
    let trials = c.trials.unwrap_or(10_000);
    let suite = suite_for(&profile, protocol);
    let (tally, mut body) = tally_body(protocol, &suite, &strategy, trials, &seed)?;
    let bound = protocol.soundness_bound();
    body["bound"] = json!(bound);
    body["slack"] = json!(SLACK);
    let pass = tally.overall.ci_low <= bound + SLACK;
    let criterion = format!("interval lower end {:.4} <= {bound:.4} + {SLACK}", tally.overall.ci_low);
    Ok(Report::new("soundness-sim", profile.name(), Some(protocol.number()), &seed, body).judged(criterion, pass))
}

fn completeness(c: &Common) -> Result<Report> {
    let profile = c.load_profile()?;
    let protocol = c.protocol_or_default();
    let seed = c.seed_or_default()?;
    let trials = c.trials.unwrap_or(10_000);
    let suite = suite_for(&profile, protocol);
    let (tally, mut body) = tally_body(protocol, &suite, &Strategy::honest_device(), trials, &seed)?;
    let target = protocol.completeness_target(&suite);
    body["target"] = json!(target);
    body["slack"] = json!(SLACK);
    let pass = tally.overall.ci_high >= target - SLACK;
    let criterion = format!("interval upper end {:.4} >= {target:.4} - {SLACK}", tally.overall.ci_high);
    Ok(Report::new("completeness-sim", profile.name(), Some(protocol.number()), &seed, body).judged(criterion, pass))
}

fn report_value(r: &GameReport) -> Value {
    serde_json::to_value(r).expect("game reports serialize")
}

fn games(c: &Common, which: &str) -> Result<Report> {
    let profile = c.load_profile()?;
    let protocol = c.protocol_or_default();
    let seed = c.seed_or_default()?;
    let trials = c.trials.unwrap_or(10_000);
    let all = which == "all";
    if !all && !["ahcb", "extraction", "kea", "lk"].contains(&which) {
        return Err(CliError::UnknownGame(which.into()).into());
    }
    let suite = suite_for(&profile, protocol);
    let mut out = Vec::new();
    if all || which == "ahcb" {
        let canonical = build_adversary_b(Strategy::classical_canonical(), CanonicalExtractor::default());
        out.push(run_ahcb_game(&suite, &canonical, trials, &seed)?);
        let cheater = Strategy::by_name("trapdoor_cheater").expect("built-in strategy");
        let cheater = build_adversary_b(cheater, CanonicalExtractor::new(PreimageRule::FullDomain));
        let mut r = run_ahcb_game(&suite, &cheater, trials, &seed)?;
        r.game = "ahcb/trapdoor_cheater".into();
        out.push(r);
    }
    if all || which == "extraction" {
        let ex = CanonicalExtractor::default();
        for role in [Role::F, Role::G, Role::H] {
            if suite.supports(role) {
                out.push(estimate_extraction_rate(&suite, &Strategy::classical_canonical(), &ex, role, trials, &seed)?);
            }
        }
    }
    if all || which == "kea" {
        let params = profile.ddh();
        out.push(run_kea_experiment(&ExponentiationAdversary, &TapeKeaExtractor, params, trials, &seed)?);
        out.push(run_kea_experiment(&ExponentiationAdversary, &ZeroKeaExtractor, params, trials, &seed)?);
    }
    if all || which == "lk" {
        let params = LkParams::toy();
        let perturb = PerturbAdversary::default();
        out.push(run_lk_experiment(&perturb, &TapeLkExtractor, &params, trials, &seed)?);
        out.push(run_lk_experiment(&perturb, &ZeroLkExtractor, &params, trials, &seed)?);
        out.push(run_lk_experiment(&perturb, &EchoLkExtractor, &params, trials, &seed)?);
        out.push(run_lk_experiment(&FarAdversary, &ZeroLkExtractor, &params, trials, &seed)?);
    }
    let body = json!({ "suite": suite.name(), "trials": trials, "games": out.iter().map(report_value).collect::<Vec<_>>() });
    Ok(Report::new("games", profile.name(), Some(protocol.number()), &seed, body))
}

fn bench(c: &Common) -> Result<Report> {
    let profile = c.load_profile()?;
    let protocol = c.protocol_or_default();
    let seed = c.seed_or_default()?;
    let trials = c.trials.unwrap_or(2_000);
    let suite = suite_for(&profile, protocol);
    let mut keygen = serde_json::Map::new();
    for role in [Role::F, Role::G, Role::H] {
        if !suite.supports(role) {
            continue;
        }
        let reps = 10;
        let t = Instant::now();
        for i in 0..reps {
            suite.generate(role, &mut derived_rng(&seed, "bench-keygen", i))?;
        }
        keygen.insert(format!("{role:?}"), json!(t.elapsed().as_micros() as u64 / reps));
    }
    let strategy = Strategy::classical_canonical();
    let session = |i: usize| run_session(protocol, &suite, &strategy, &SessionSeeds::batch(&seed, i as u64), &NonZeroEqSet);
    let t = Instant::now();
    let par = map_trials(trials, session);
    let par_ms = t.elapsed().as_secs_f64() * 1e3;
    let t = Instant::now();
    let seq = map_trials_sequential(trials, session);
    let seq_ms = t.elapsed().as_secs_f64() * 1e3;
    let par = par.into_iter().collect::<Result<Vec<_>, _>>().context("parallel sessions")?;
    let seq = seq.into_iter().collect::<Result<Vec<_>, _>>().context("sequential sessions")?;
    let agree = par.iter().zip(&seq).all(|(a, b)| a.response == b.response && a.verdict == b.verdict);
    let body = json!({
        "suite": suite.name(),
        "keygen_us": keygen,
        "sessions": trials,
        "parallel_ms": par_ms,
        "sequential_ms": seq_ms,
        "speedup": seq_ms / par_ms.max(1e-9),
        "threads": std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        "paths_agree": agree,
    });
    Ok(Report::new("bench", profile.name(), Some(protocol.number()), &seed, body))
}
