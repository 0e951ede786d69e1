use std::path::{Path, PathBuf};
use std::time::Duration;

use poqka_core::coins::{seed_from_hex, Seed};
use poqka_core::profile::{ParamProfile, ProfileError};
use poqka_core::protocol::ProtocolId;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 7411;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("protocol {0} has no single-round wire form")]
    Protocol(ProtocolId),
    #[error("seed: {0}")]
    Seed(String),
}

/// Verifier service settings, loaded from JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub profile: String,
    pub protocol: ProtocolId,
    #[serde(default = "default_deadline")]
    pub deadline_ms: u64,
    #[serde(default)]
    pub log_path: Option<PathBuf>,
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_port")]
    pub port: u16,
    /// Hex root seed for the verifier's coins; random when absent.
    #[serde(default)]
    pub seed: Option<String>,
    /// How long an idle connection is kept outside the response deadline.
    #[serde(default = "default_idle")]
    pub idle_ms: u64,
}

fn default_deadline() -> u64 {
    5_000
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

fn default_port() -> u16 {
    DEFAULT_PORT
}

fn default_idle() -> u64 {
    30_000
}

impl ServiceConfig {
    pub fn new(profile: &str, protocol: ProtocolId) -> Self {
        Self {
            profile: profile.into(),
            protocol,
            deadline_ms: default_deadline(),
            log_path: None,
            bind: default_bind(),
            port: default_port(),
            seed: None,
            idle_ms: default_idle(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn deadline(&self) -> Duration {
        Duration::from_millis(self.deadline_ms)
    }

    pub fn idle(&self) -> Duration {
        Duration::from_millis(self.idle_ms)
    }

    pub fn address(&self) -> String {
        format!("{}:{}", self.bind, self.port)
    }

    /// Builds the profile and checks that the protocol is single-round.
    pub fn validate(&self) -> Result<ParamProfile, ConfigError> {
        if self.protocol == ProtocolId::TwoRound {
            return Err(ConfigError::Protocol(self.protocol));
        }
        self.root_seed()?;
        Ok(ParamProfile::named(&self.profile)?)
    }

    pub fn root_seed(&self) -> Result<Seed, ConfigError> {
        match &self.seed {
            Some(hex) => seed_from_hex(hex).map_err(ConfigError::Seed),
            None => {
                let mut s = [0u8; 32];
                rand::rngs::OsRng.fill_bytes(&mut s);
                Ok(s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_full_configs() {
        let c: ServiceConfig = serde_json::from_str(r#"{"profile":"toy","protocol":3}"#).unwrap();
        assert_eq!(c, ServiceConfig::new("toy", ProtocolId::ThreeTest));
        assert_eq!(c.port, 7411);
        let full = r#"{"profile":"toy","protocol":4,"deadline_ms":250,"log_path":"t.jsonl","bind":"0.0.0.0","port":9000,"seed":"00","idle_ms":10}"#;
        let c: ServiceConfig = serde_json::from_str(full).unwrap();
        assert_eq!(c.deadline(), Duration::from_millis(250));
        assert!(matches!(c.validate(), Err(ConfigError::Seed(_))));
        assert!(serde_json::from_str::<ServiceConfig>(r#"{"profile":"toy","protocol":2}"#).is_err());
        assert!(serde_json::from_str::<ServiceConfig>(r#"{"profile":"toy","protocol":3,"x":1}"#).is_err());
    }

    #[test]
    fn rejects_two_round_and_unknown_profiles() {
        assert!(matches!(ServiceConfig::new("toy", ProtocolId::TwoRound).validate(), Err(ConfigError::Protocol(_))));
        assert!(matches!(ServiceConfig::new("huge", ProtocolId::TwoTest).validate(), Err(ConfigError::Profile(_))));
    }
}
