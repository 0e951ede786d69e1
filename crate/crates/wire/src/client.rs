//! Prover client.

use std::net::{TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use poqka_core::coins::{derive_seed, CoinTape, Seed};
use poqka_core::family::{FamilyTrapdoor, Role, Suite};
use poqka_core::profile::ParamProfile;
use poqka_core::protocol::{sample_challenge, ProtocolError, ProtocolId, SessionSeeds, Transcript, VerdictKind};
use poqka_core::provers::Strategy;
use thiserror::Error;

use crate::frame::{read_frame, write_frame, FrameError, MsgType, WireMessage};
use crate::message::{ChallengeMsg, ErrorCode, ErrorMsg, MessageError, SessionInit, VerdictMsg};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("connection failed: {0}")]
    ConnectionFailed(String),
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("server error {code:?}: {detail}")]
    Server { code: ErrorCode, detail: String },
    #[error(transparent)]
    Prover(#[from] ProtocolError),
}

impl From<FrameError> for ClientError {
    fn from(e: FrameError) -> Self {
        ClientError::ProtocolError(e.to_string())
    }
}

impl From<MessageError> for ClientError {
    fn from(e: MessageError) -> Self {
        ClientError::ProtocolError(e.to_string())
    }
}

/// Test-only trapdoor source for simulator strategies: knowing the
/// verifier's root seed, it re-derives the challenge of a given session.
/// Nothing secret ever crosses the wire.
#[derive(Clone, Debug)]
pub struct SeedReplayOracle {
    verifier_root: Seed,
}

impl SeedReplayOracle {
    pub fn new(verifier_root: Seed) -> Self {
        Self { verifier_root }
    }

    /// The trapdoor behind `blind_key`, if the key is the one this root
    /// issues for session `index`.
    pub fn trapdoor(&self, protocol: ProtocolId, suite: &Suite, index: u64, blind_key: &[u8]) -> Option<FamilyTrapdoor> {
        let seeds = SessionSeeds { verifier_root: self.verifier_root, index, prover: [0; 32] };
        let ch = sample_challenge(protocol, suite, &mut seeds.verifier_rng()).ok()?;
        (ch.key.encode_blind() == blind_key).then_some(ch.trapdoor)
    }
}

#[derive(Clone, Debug)]
pub struct ClientConfig {
    pub profile: ParamProfile,
    pub protocol: ProtocolId,
    pub strategy: Strategy,
    /// Root of the prover's coins; the tape for session `i` is derived from it.
    pub seed: Seed,
    pub oracle: Option<SeedReplayOracle>,
    pub timeout: Duration,
}

impl ClientConfig {
    pub fn new(profile: ParamProfile, protocol: ProtocolId, strategy: Strategy, seed: Seed) -> Self {
        Self { profile, protocol, strategy, seed, oracle: None, timeout: Duration::from_secs(30) }
    }

    pub fn with_oracle(mut self, oracle: SeedReplayOracle) -> Self {
        self.oracle = Some(oracle);
        self
    }
}

/// A session as the client saw it, plus every frame the server sent.
#[derive(Clone, Debug)]
pub struct ClientRun {
    pub transcript: Transcript,
    pub received: Vec<Vec<u8>>,
}

/// Runs one session and returns the client-side transcript.
pub fn client_run(address: &str, cfg: &ClientConfig) -> Result<Transcript, ClientError> {
    Ok(client_run_captured(address, cfg)?.transcript)
}

pub fn client_run_captured(address: &str, cfg: &ClientConfig) -> Result<ClientRun, ClientError> {
    let suite = cfg.protocol.default_suite(&cfg.profile);
    let mut stream = connect(address, cfg.timeout)?;
    let mut received = Vec::new();

    write_frame(&mut stream, &SessionInit { protocol: cfg.protocol, profile: cfg.profile.name().into() }.to_frame())?;
    let ch = ChallengeMsg::from_frame(&expect(&mut stream, MsgType::Challenge, &mut received)?)?;
    let key = suite
        .decode_key(&ch.key, Role::F)
        .map_err(|e| ClientError::ProtocolError(format!("undecodable key: {e}")))?;
    let trap = match (&cfg.oracle, cfg.strategy.needs_trapdoor()) {
        (Some(o), true) => o.trapdoor(cfg.protocol, &suite, ch.index, &ch.key),
        _ => None,
    };

    let mut tape = CoinTape::new(derive_seed(&cfg.seed, "prover", ch.index));
    let t0 = Instant::now();
    let resp = cfg.strategy.respond(&suite, &key, trap.as_ref(), &mut tape)?;
    let prover_us = t0.elapsed().as_micros() as u64;
    let bytes = resp.encode();
    write_frame(&mut stream, &WireMessage::new(MsgType::Response, bytes.clone()))?;
    let v = VerdictMsg::from_frame(&expect(&mut stream, MsgType::Verdict, &mut received)?)?;

    let transcript = Transcript {
        session_id: hex::encode(ch.session_id),
        session_index: ch.index,
        protocol: cfg.protocol,
        suite: suite.name().into(),
        strategy: cfg.strategy.name().into(),
        challenge: v.challenge,
        key: hex::encode(&ch.key),
        response: hex::encode(bytes),
        verdict: if v.verdict.accepted() { VerdictKind::Accept } else { VerdictKind::Reject },
        reason: v.verdict.reason(),
        prover_us,
        verify_us: 0,
    };
    Ok(ClientRun { transcript, received })
}

fn connect(address: &str, timeout: Duration) -> Result<TcpStream, ClientError> {
    let addrs = address.to_socket_addrs().map_err(|e| ClientError::ConnectionFailed(format!("{address}: {e}")))?;
    let mut last = format!("{address}: no addresses");
    for a in addrs {
        match TcpStream::connect_timeout(&a, timeout) {
            Ok(s) => {
                s.set_read_timeout(Some(timeout)).map_err(|e| ClientError::ConnectionFailed(e.to_string()))?;
                s.set_nodelay(true).map_err(|e| ClientError::ConnectionFailed(e.to_string()))?;
                return Ok(s);
            }
            Err(e) => last = format!("{a}: {e}"),
        }
    }
    Err(ClientError::ConnectionFailed(last))
}

fn expect(stream: &mut TcpStream, kind: MsgType, log: &mut Vec<Vec<u8>>) -> Result<WireMessage, ClientError> {
    let msg = read_frame(stream)?.ok_or_else(|| ClientError::ProtocolError("server closed the connection".into()))?;
    log.push(msg.encode()?);
    match msg.kind() {
        Some(k) if k == kind => Ok(msg),
        Some(MsgType::Error) => {
            let e = ErrorMsg::from_frame(&msg)?;
            Err(ClientError::Server { code: e.code, detail: e.detail })
        }
        _ => Err(ClientError::ProtocolError(format!("expected {kind:?}, got type {:#04x}", msg.msg_type))),
    }
}
