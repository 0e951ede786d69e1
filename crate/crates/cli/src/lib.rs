//! Command implementations behind the `poqka` binary.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use poqka_core::coins::Seed;
use poqka_core::profile::ParamProfile;
use poqka_core::protocol::ProtocolId;
use poqka_core::provers::Strategy;
use thiserror::Error;

mod commands;
pub mod report;
pub mod selftest;

pub use commands::service_config;
pub use report::Report;

/// `<crate version>+<git describe>` of this build.
pub const BUILD_ID: &str = env!("POQKA_BUILD_ID");

/// Slack added to every rate threshold. At the default trial counts it is
/// wider than three standard errors of any rate in play.
pub const SLACK: f64 = 0.02;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("strategy `{0}` needs the verifier's trapdoor; soundness is only defined for classical provers")]
    StrategyNeedsTrapdoor(String),
    #[error("unknown strategy `{0}` (expected one of {names})", names = Strategy::NAMES.join(", "))]
    UnknownStrategy(String),
    #[error("seed must be 1 to 32 bytes of hex, got `{0}`")]
    BadSeed(String),
    #[error("unknown game `{0}` (expected ahcb, extraction, kea, lk or all)")]
    UnknownGame(String),
}

#[derive(Parser, Debug)]
#[command(name = "poqka", version = BUILD_ID, about = "Proof-of-quantumness protocols from claw-free families")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Parameter profile: toy, mid or paper.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Protocol number: 1 (two-round), 3 (Eq/sIm/wIm) or 4 (Eq/Im).
    #[arg(long, global = true, value_parser = parse_protocol)]
    pub protocol: Option<ProtocolId>,
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Root seed, 1 to 32 bytes of hex (left-padded with zeros).
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Generate a key and trapdoor.
    Keygen {
        /// F, G or H; defaults to F.
        #[arg(long, default_value = "F")]
        role: String,
    },
    /// Run sessions in process, or against a service with --connect.
    Run {
        #[arg(long)]
        connect: Option<String>,
        /// Verifier root seed, lets simulator strategies re-derive trapdoors over the wire.
        #[arg(long)]
        verifier_seed: Option<String>,
    },
    /// Start the verifier service.
    Serve {
        /// JSON service config; flags given on the command line override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        deadline_ms: Option<u64>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Time key generation and session throughput.
    Bench,
    /// Acceptance rate of a classical strategy against the soundness constant.
    SoundnessSim,
    /// Acceptance rate of the honest device against the completeness target.
    CompletenessSim,
    /// Run the extraction and knowledge games.
    Games {
        #[arg(long, default_value = "all")]
        game: String,
    },
    /// Exhaustive toy-scale checks of every module.
    Selftest,
}

fn parse_protocol(s: &str) -> Result<ProtocolId, String> {
    s.parse::<u8>()
        .ok()
        .and_then(ProtocolId::from_number)
        .ok_or_else(|| format!("protocol must be 1, 3 or 4, got `{s}`"))
}

/// Left-pads 1..=32 bytes of hex into a seed.
pub fn parse_seed(text: &str) -> Result<Seed, CliError> {
    let bytes = hex::decode(text.trim()).map_err(|_| CliError::BadSeed(text.into()))?;
    if bytes.is_empty() || bytes.len() > 32 {
        return Err(CliError::BadSeed(text.into()));
    }
    let mut seed = [0u8; 32];
    seed[32 - bytes.len()..].copy_from_slice(&bytes);
    Ok(seed)
}

impl Common {
    pub fn profile_name(&self) -> &str {
        self.profile.as_deref().unwrap_or("toy")
    }

    /// Builds and validates the named profile.
    pub fn load_profile(&self) -> Result<ParamProfile> {
        ParamProfile::named(self.profile_name()).with_context(|| format!("profile `{}`", self.profile_name()))
    }

    pub fn protocol_or_default(&self) -> ProtocolId {
        self.protocol.unwrap_or(ProtocolId::ThreeTest)
    }

    pub fn seed_or_default(&self) -> Result<Seed> {
        Ok(match &self.seed {
            Some(s) => parse_seed(s)?,
            None => [0; 32],
        })
    }

    pub fn strategy_or(&self, default: &str) -> Result<Strategy> {
        let name = self.strategy.as_deref().unwrap_or(default);
        Ok(Strategy::by_name(name).ok_or_else(|| CliError::UnknownStrategy(name.into()))?)
    }
}

/// Result of a command: the report and, for commands that encode a
/// pass/fail criterion, the verdict.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        match self.report.pass {
            Some(false) => 1,
            _ => 0,
        }
    }
}

/// Runs a parsed command, printing and saving its report.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let report = commands::dispatch(cli)?;
    let text = if cli.common.json { report.to_json() } else { report.to_text() };
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = writeln!(stdout, "{text}") {
        // a closed pipe (`| head`) is not an error of the command
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(e.into());
        }
    }
    if let Some(path) = &cli.common.out {
        std::fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Outcome { report })
}

/// Same as [`execute`] but without printing; used by tests.
pub fn evaluate(cli: &Cli) -> Result<Report> {
    commands::dispatch(cli)
}

pub(crate) fn ensure_single_round(protocol: ProtocolId) -> Result<()> {
    if protocol == ProtocolId::TwoRound {
        bail!("the wire service only carries protocols 3 and 4");
    }
    Ok(())
}
