//! Engine configuration with file-based overrides.
//!
//! Settings resolve in three layers: built-in defaults, then a TOML file
//! named by the `REGULUS_CONFIG` environment variable, then whatever the
//! caller (normally the CLI's flags) overrides on the loaded value. Every
//! field is optional in the file; unknown keys are rejected so typos fail
//! loudly instead of silently falling back to a default.

use std::env;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const CONFIG_ENV_VAR: &str = "REGULUS_CONFIG";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Directory certificates are written into.
    pub out_dir: PathBuf,
    /// Worker threads for parallel scans; 0 picks the machine default.
    pub threads: usize,
    /// Default q-depth for congruence verifications.
    pub congruence_depth: u32,
    /// Default q-depth for exact identity verification.
    pub identity_depth: u32,
    /// Default q-depth for Hecke annihilation scans.
    pub search_depth: u32,
    /// Default prime range scanned for annihilating operators.
    pub prime_lo: u64,
    pub prime_hi: u64,
    /// Default progression verification range (indices 0..=n_max).
    pub n_max: u32,
    /// Most progressions a single search run will verify and emit.
    pub max_emitted: usize,
    /// Jobs whose series depth exceeds this are refused up front; the engine
    /// additionally enforces its own hard cap internally.
    pub depth_ceiling: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            out_dir: PathBuf::from("."),
            threads: 0,
            congruence_depth: 1000,
            identity_depth: 2000,
            search_depth: 2000,
            prime_lo: 5,
            prime_hi: 100,
            n_max: 2000,
            max_emitted: 4,
            depth_ceiling: 10_000_000,
        }
    }
}

impl EngineConfig {
    /// Defaults overlaid with the file named by `REGULUS_CONFIG`, when set.
    pub fn load() -> Result<EngineConfig, Error> {
        match env::var(CONFIG_ENV_VAR) {
            Ok(path) if !path.is_empty() => EngineConfig::from_file(Path::new(&path)),
            _ => Ok(EngineConfig::default()),
        }
    }

    pub fn from_file(path: &Path) -> Result<EngineConfig, Error> {
        let text = std::fs::read_to_string(path)?;
        EngineConfig::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<EngineConfig, Error> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config file: {e}")))
    }

    /// Basic sanity: ranges nonempty, depths nonzero.
    pub fn validate(&self) -> Result<(), Error> {
        if self.congruence_depth == 0 || self.identity_depth == 0 || self.search_depth == 0 {
            return Err(Error::InvalidParameter(
                "configured depths must be positive".to_string(),
            ));
        }
        if self.prime_lo > self.prime_hi {
            return Err(Error::InvalidParameter(format!(
                "empty prime range {}..{}",
                self.prime_lo, self.prime_hi
            )));
        }
        if self.depth_ceiling == 0 {
            return Err(Error::InvalidParameter(
                "depth ceiling must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_are_pinned() {
        let c = EngineConfig::default();
        assert_eq!(c.congruence_depth, 1000);
        assert_eq!(c.identity_depth, 2000);
        assert_eq!(c.search_depth, 2000);
        assert_eq!(c.n_max, 2000);
        assert_eq!(c.prime_lo, 5);
        assert_eq!(c.prime_hi, 100);
        assert_eq!(c.threads, 0);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_overlays_defaults() {
        let c = EngineConfig::from_toml("threads = 8\ncongruence_depth = 50\n").unwrap();
        assert_eq!(c.threads, 8);
        assert_eq!(c.congruence_depth, 50);
        assert_eq!(c.identity_depth, 2000);
        assert_eq!(c.out_dir, PathBuf::from("."));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = EngineConfig::from_toml("congruence_dpeth = 50\n").unwrap_err();
        assert!(err.to_string().contains("config file"));
    }

    #[test]
    fn invalid_ranges_fail_validation() {
        let swapped = EngineConfig {
            prime_lo: 50,
            prime_hi: 10,
            ..EngineConfig::default()
        };
        assert!(swapped.validate().is_err());
        let flat = EngineConfig {
            identity_depth: 0,
            ..EngineConfig::default()
        };
        assert!(flat.validate().is_err());
    }

    #[test]
    fn env_var_names_the_file() {
        let path = env::temp_dir().join(format!("regulus-config-{}.toml", std::process::id()));
        {
            let mut f = std::fs::File::create(&path).unwrap();
            writeln!(f, "n_max = 123").unwrap();
        }
        env::set_var(CONFIG_ENV_VAR, &path);
        let c = EngineConfig::load().unwrap();
        env::remove_var(CONFIG_ENV_VAR);
        std::fs::remove_file(&path).ok();
        assert_eq!(c.n_max, 123);
        assert_eq!(c.identity_depth, 2000);
    }

    #[test]
    fn load_without_env_is_default() {
        // the env test above removes the variable again; when unset, load()
        // must hand back plain defaults
        if env::var(CONFIG_ENV_VAR).is_err() {
            assert_eq!(EngineConfig::load().unwrap(), EngineConfig::default());
        }
    }
}
