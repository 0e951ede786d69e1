//! Network embodiment of the single-round protocols: a framed TCP format, a
//! threaded verifier service and a prover client.

pub mod client;
pub mod config;
pub mod frame;
pub mod message;
pub mod server;

pub use client::{client_run, client_run_captured, ClientConfig, ClientError, ClientRun, SeedReplayOracle};
pub use config::{ConfigError, ServiceConfig, DEFAULT_PORT};
pub use frame::{read_frame, write_frame, FrameError, MsgType, WireMessage, MAGIC, MAX_PAYLOAD, VERSION};
pub use message::{ChallengeMsg, ErrorCode, ErrorMsg, MessageError, SessionInit, VerdictMsg};
pub use server::{serve, ServeError, ServerHandle};
