//! Verifier service: one thread and one session per connection, transcripts
//! funnelled through a channel to a single log writer.

use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use poqka_core::coins::Seed;
use poqka_core::family::Suite;
use poqka_core::protocol::{
    sample_challenge, verify_bytes, Challenge, NonZeroEqSet, ProtocolError, ProtocolId, RejectReason, SessionSeeds,
    Transcript, Verdict, VerdictKind,
};
use thiserror::Error;

use crate::config::{ConfigError, ServiceConfig};
use crate::frame::{read_frame, write_frame, FrameError, MsgType, WireMessage};
use crate::message::{ChallengeMsg, ErrorCode, ErrorMsg, SessionInit, VerdictMsg};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("binding {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("transcript log: {0}")]
    Log(std::io::Error),
}

struct Shared {
    profile: String,
    protocol: ProtocolId,
    suite: Suite,
    root: Seed,
    deadline: Duration,
    idle: Duration,
    next_index: AtomicU64,
    stop: AtomicBool,
}

/// A running service. Dropping the handle leaves the threads running; call
/// [`ServerHandle::shutdown`] to stop and flush the log.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    acceptor: JoinHandle<()>,
    writer: JoinHandle<std::io::Result<u64>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn root_seed(&self) -> Seed {
        self.shared.root
    }

    /// Sessions issued so far.
    pub fn issued(&self) -> u64 {
        self.shared.next_index.load(Ordering::SeqCst)
    }

    /// Blocks until the acceptor exits, which only happens on shutdown.
    pub fn wait(self) -> Result<u64, ServeError> {
        self.acceptor.join().expect("acceptor thread panicked");
        self.writer.join().expect("writer thread panicked").map_err(ServeError::Log)
    }

    /// Stops accepting, waits for open sessions to end and returns the
    /// number of transcripts written.
    pub fn shutdown(self) -> Result<u64, ServeError> {
        self.shared.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        self.wait()
    }
}

/// Binds and starts the service in background threads.
pub fn serve(config: &ServiceConfig) -> Result<ServerHandle, ServeError> {
    let profile = config.validate()?;
    let suite = config.protocol.default_suite(&profile);
    // fail on unsupported suites before accepting anyone
    sample_challenge(config.protocol, &suite, &mut rand::rngs::OsRng)?;
    let listener = TcpListener::bind(config.address())
        .map_err(|source| ServeError::Bind { addr: config.address(), source })?;
    let addr = listener.local_addr().map_err(|source| ServeError::Bind { addr: config.address(), source })?;

    let log: Option<Box<dyn Write + Send>> = match &config.log_path {
        Some(path) => {
            let f = OpenOptions::new().create(true).append(true).open(path).map_err(ServeError::Log)?;
            Some(Box::new(BufWriter::new(f)))
        }
        None => None,
    };
    let (tx, rx) = mpsc::channel::<Transcript>();
    let writer = thread::spawn(move || {
        let mut log = log;
        let mut count = 0u64;
        for t in rx {
            if let Some(out) = log.as_mut() {
                writeln!(out, "{}", t.to_json_line())?;
                out.flush()?;
            }
            count += 1;
        }
        Ok(count)
    });

    let shared = Arc::new(Shared {
        profile: profile.name().to_string(),
        protocol: config.protocol,
        suite,
        root: config.root_seed()?,
        deadline: config.deadline(),
        idle: config.idle(),
        next_index: AtomicU64::new(0),
        stop: AtomicBool::new(false),
    });
    let acc_shared = Arc::clone(&shared);
    let acceptor = thread::spawn(move || accept_loop(listener, acc_shared, tx));
    Ok(ServerHandle { addr, shared, acceptor, writer })
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>, log: Sender<Transcript>) {
    let mut workers: Vec<JoinHandle<()>> = Vec::new();
    for conn in listener.incoming() {
        if shared.stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = conn else { continue };
        workers.retain(|h| !h.is_finished());
        let (s, l) = (Arc::clone(&shared), log.clone());
        workers.push(thread::spawn(move || {
            // errors here are per-connection and only end that connection
            let _ = Session::new(&s, l).run(stream);
        }));
    }
    for w in workers {
        let _ = w.join();
    }
}

enum State {
    AwaitInit,
    AwaitResponse { seeds: SessionSeeds, challenge: Challenge, sent: Instant, deadline: Instant },
    Done,
}

struct Session<'a> {
    shared: &'a Shared,
    log: Sender<Transcript>,
    state: State,
}

impl<'a> Session<'a> {
    fn new(shared: &'a Shared, log: Sender<Transcript>) -> Self {
        Self { shared, log, state: State::AwaitInit }
    }

    fn run(mut self, mut stream: TcpStream) -> Result<(), FrameError> {
        stream.set_nodelay(true)?;
        loop {
            let wait = match &self.state {
                State::AwaitResponse { deadline, .. } => deadline.saturating_duration_since(Instant::now()),
                _ => self.shared.idle,
            };
            if wait.is_zero() {
                self.time_out(&mut stream)?;
                continue;
            }
            stream.set_read_timeout(Some(wait))?;
            let msg = match read_frame(&mut stream) {
                Ok(Some(m)) => m,
                Ok(None) => return Ok(()),
                Err(e) if e.is_timeout() => {
                    // a half-read frame leaves the stream unsynchronised, so close after the verdict
                    self.time_out(&mut stream)?;
                    linger_close(stream);
                    return Ok(());
                }
                Err(e @ FrameError::Io(_)) => return Err(e),
                Err(e) => {
                    let _ = send_error(&mut stream, ErrorCode::Malformed, e.to_string());
                    linger_close(stream);
                    return Err(e);
                }
            };
            self.handle(&mut stream, msg)?;
        }
    }

    fn handle(&mut self, stream: &mut TcpStream, msg: WireMessage) -> Result<(), FrameError> {
        let Some(kind) = msg.kind() else {
            return send_error(stream, ErrorCode::UnknownType, format!("unknown message type {:#04x}", msg.msg_type));
        };
        match (kind, &self.state) {
            (MsgType::SessionInit, State::AwaitInit) => self.open(stream, &msg),
            (MsgType::Response, State::AwaitResponse { .. }) => self.close(stream, &msg.payload),
            (MsgType::Response, State::AwaitInit) => send_error(stream, ErrorCode::OutOfOrder, "response before challenge"),
            (MsgType::Response, State::Done) => send_error(stream, ErrorCode::OutOfOrder, "response after verdict"),
            (MsgType::SessionInit, _) => send_error(stream, ErrorCode::OutOfOrder, "one session per connection"),
            (other, _) => send_error(stream, ErrorCode::OutOfOrder, format!("{other:?} is not a client message")),
        }
    }

    fn open(&mut self, stream: &mut TcpStream, msg: &WireMessage) -> Result<(), FrameError> {
        let init = match SessionInit::from_frame(msg) {
            Ok(i) => i,
            Err(e) => return send_error(stream, ErrorCode::Malformed, e.to_string()),
        };
        if init.protocol != self.shared.protocol || init.profile != self.shared.profile {
            let detail = format!(
                "service runs protocol {} on profile {}, client asked for protocol {} on {}",
                self.shared.protocol, self.shared.profile, init.protocol, init.profile
            );
            return send_error(stream, ErrorCode::Mismatch, detail);
        }
        let index = self.shared.next_index.fetch_add(1, Ordering::SeqCst);
        // the prover seed is not the server's business
        let seeds = SessionSeeds { verifier_root: self.shared.root, index, prover: [0; 32] };
        let challenge = match sample_challenge(self.shared.protocol, &self.shared.suite, &mut seeds.verifier_rng()) {
            Ok(c) => c,
            Err(e) => return send_error(stream, ErrorCode::Internal, e.to_string()),
        };
        let frame = ChallengeMsg { session_id: seeds.session_id(), index, key: challenge.key.encode_blind() }.to_frame();
        write_frame(stream, &frame)?;
        let sent = Instant::now();
        self.state = State::AwaitResponse { seeds, challenge, sent, deadline: sent + self.shared.deadline };
        Ok(())
    }

    fn close(&mut self, stream: &mut TcpStream, payload: &[u8]) -> Result<(), FrameError> {
        let State::AwaitResponse { seeds, challenge, sent, deadline } = std::mem::replace(&mut self.state, State::Done) else {
            unreachable!("close is only called while awaiting a response");
        };
        let prover_us = sent.elapsed().as_micros() as u64;
        let t = Instant::now();
        let verdict = if Instant::now() > deadline {
            Verdict::Reject(RejectReason::Timeout)
        } else {
            verify_bytes(&self.shared.suite, &challenge, payload, &NonZeroEqSet)
        };
        let verify_us = t.elapsed().as_micros() as u64;
        write_frame(stream, &VerdictMsg { verdict, challenge: challenge.ctype }.to_frame())?;
        self.record(&seeds, &challenge, payload, verdict, prover_us, verify_us);
        Ok(())
    }

    fn time_out(&mut self, stream: &mut TcpStream) -> Result<(), FrameError> {
        let State::AwaitResponse { seeds, challenge, sent, .. } = std::mem::replace(&mut self.state, State::Done) else {
            return Ok(());
        };
        let verdict = Verdict::Reject(RejectReason::Timeout);
        let prover_us = sent.elapsed().as_micros() as u64;
        self.record(&seeds, &challenge, &[], verdict, prover_us, 0);
        write_frame(stream, &VerdictMsg { verdict, challenge: challenge.ctype }.to_frame())
    }

    fn record(&self, seeds: &SessionSeeds, ch: &Challenge, resp: &[u8], v: Verdict, prover_us: u64, verify_us: u64) {
        let t = Transcript {
            session_id: hex::encode(seeds.session_id()),
            session_index: seeds.index,
            protocol: self.shared.protocol,
            suite: self.shared.suite.name().into(),
            strategy: "remote".into(),
            challenge: ch.ctype,
            key: hex::encode(ch.key.encode_blind()),
            response: hex::encode(resp),
            verdict: if v.accepted() { VerdictKind::Accept } else { VerdictKind::Reject },
            reason: v.reason(),
            prover_us,
            verify_us,
        };
        // the writer only goes away after every session thread has finished
        let _ = self.log.send(t);
    }
}

/// Half-closes and drains briefly so unread input does not turn the close
/// into a reset that destroys the error frame in flight.
fn linger_close(mut stream: TcpStream) {
    let _ = stream.shutdown(Shutdown::Write);
    let _ = stream.set_read_timeout(Some(Duration::from_millis(500)));
    let _ = std::io::copy(&mut stream, &mut std::io::sink());
}

fn send_error(stream: &mut TcpStream, code: ErrorCode, detail: impl Into<String>) -> Result<(), FrameError> {
    write_frame(stream, &ErrorMsg::new(code, detail).to_frame())
}
