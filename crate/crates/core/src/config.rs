//! Flat `key = value` configuration with `#` comments.
//!
//! ```text
//! d = 3
//! p = 5
//! s = 6
//! m1 = 9
//! m2 = 3
//! search_bound = 50
//! sieve_cap = 360
//! output_mode = text
//! ```

use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::dimgroup::{DimError, DimGroupParams};
use crate::fungroup::DEFAULT_SEARCH_BOUND;
use crate::pell::DEFAULT_SIEVE_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Text,
    Structured,
}

impl FromStr for OutputMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "text" => Ok(OutputMode::Text),
            "structured" | "json" => Ok(OutputMode::Structured),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub params: DimGroupParams,
    pub search_bound: u64,
    pub sieve_cap: u64,
    pub output_mode: OutputMode,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected key = value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for {key}")]
    BadValue { line: usize, key: String, value: String },
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error(transparent)]
    Params(#[from] DimError),
}

impl Default for Config {
    fn default() -> Self {
        Config {
            params: DimGroupParams::standard(),
            search_bound: DEFAULT_SEARCH_BOUND,
            sieve_cap: DEFAULT_SIEVE_CAP,
            output_mode: OutputMode::Text,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        text.parse()
    }
}

impl FromStr for Config {
    type Err = ConfigError;

    /// Missing keys keep their defaults; the resulting parameters are
    /// validated.
    fn from_str(text: &str) -> Result<Config, ConfigError> {
        let def = Config::default();
        let p = def.params;
        let (mut d, mut prime, mut s, mut m1, mut m2) = (p.d(), p.p(), p.s() as u64, p.m1(), p.m2());
        let mut cfg = def;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::Syntax { line, text: raw.to_string() })?;
            let bad = || ConfigError::BadValue { line, key: key.to_string(), value: value.to_string() };
            let num = || value.parse::<u64>().map_err(|_| bad());
            match key {
                "d" => d = num()?,
                "p" => prime = num()?,
                "s" => s = num()?,
                "m1" => m1 = num()?,
                "m2" => m2 = num()?,
                "search_bound" => cfg.search_bound = num()?,
                "sieve_cap" => cfg.sieve_cap = num()?,
                "output_mode" => cfg.output_mode = value.parse().map_err(|_| bad())?,
                _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
            }
        }
        if cfg.search_bound == 0 {
            return Err(ConfigError::NotPositive("search_bound"));
        }
        if cfg.sieve_cap == 0 {
            return Err(ConfigError::NotPositive("sieve_cap"));
        }
        let s = u32::try_from(s).map_err(|_| ConfigError::NotPositive("s"))?;
        cfg.params = DimGroupParams::new(d, prime, s, m1, m2)?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg: Config = "# instance\nd = 3\np=5\ns = 6 # step\nm1 = 9\nm2 = 3\nsearch_bound = 20\noutput_mode = structured\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.params, DimGroupParams::standard());
        assert_eq!(cfg.search_bound, 20);
        assert_eq!(cfg.sieve_cap, DEFAULT_SIEVE_CAP);
        assert_eq!(cfg.output_mode, OutputMode::Structured);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!("s = 1".parse::<Config>(), Err(ConfigError::Params(DimError::BadModulus { .. }))));
        assert!(matches!("d 3".parse::<Config>(), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!("\nq = 3".parse::<Config>(), Err(ConfigError::UnknownKey { line: 2, .. })));
        assert!(matches!("d = -3".parse::<Config>(), Err(ConfigError::BadValue { .. })));
        assert!(matches!("search_bound = 0".parse::<Config>(), Err(ConfigError::NotPositive(_))));
        assert!(matches!("d = 4".parse::<Config>(), Err(ConfigError::Params(DimError::Ring(_)))));
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!("".parse::<Config>().unwrap(), Config::default());
    }
}
