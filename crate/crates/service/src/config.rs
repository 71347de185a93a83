use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use twinsim_core::orchestrator::BackendConfig;

use crate::ServiceError;

pub const ENV_LISTEN: &str = "DTWIN_LISTEN";
pub const ENV_CATALOG: &str = "DTWIN_CATALOG";
pub const ENV_SCENE: &str = "DTWIN_SCENE";
pub const ENV_SESSION_TTL: &str = "DTWIN_SESSION_TTL";

/// Service configuration file (TOML). Environment variables override it.
///
/// ```toml
/// listen = "127.0.0.1:8080"
/// session_ttl_s = 3600
/// [backend]
/// kind = "live"
/// endpoint = "http://127.0.0.1:11434/v1"
/// model = "gemma2:9b"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    /// Catalog JSON; the built-in road catalog when absent.
    pub catalog: Option<PathBuf>,
    /// Scene JSON every new session starts from; the demo scene when absent.
    pub scene: Option<PathBuf>,
    pub session_ttl_s: u64,
    /// One agent level instead of two.
    pub bypass_level2: bool,
    pub backend: BackendConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            catalog: None,
            scene: None,
            session_ttl_s: 3600,
            bypass_level2: false,
            backend: BackendConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        if let Some(v) = lookup(ENV_LISTEN) {
            self.listen = v;
        }
        if let Some(v) = lookup(ENV_CATALOG) {
            self.catalog = Some(v.into());
        }
        if let Some(v) = lookup(ENV_SCENE) {
            self.scene = Some(v.into());
        }
        if let Some(v) = lookup(ENV_SESSION_TTL) {
            self.session_ttl_s = v
                .trim()
                .parse()
                .map_err(|_| ServiceError::Config(format!("{ENV_SESSION_TTL}={v}: expected whole seconds")))?;
        }
        self.backend
            .apply_env(&lookup)
            .map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// File (if any) then process environment.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut c = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        c.apply_env(|k| std::env::var(k).ok())?;
        Ok(c)
    }

    pub fn ttl(&self) -> Duration {
        Duration::from_secs(self.session_ttl_s)
    }
}
