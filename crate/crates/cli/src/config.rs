//! `key=value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;

use teachsize::params::{ComplexityFunction, TrieBoundParams};
use teachsize::Params;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}` (known: {})", KEYS.join(", "))]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{value}` is not a valid value for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Records,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub params: Params,
    /// Identification limit for I-search; by default the non-incremental
    /// total plus 8.
    pub h: Option<usize>,
    pub threads: Option<usize>,
    pub book_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params::default(),
            h: None,
            threads: None,
            book_path: None,
            format: OutputFormat::Table,
        }
    }
}

pub const KEYS: [&str; 10] = [
    "f.a",
    "f.b",
    "rho",
    "kappa",
    "max_witness_bits",
    "max_prog_bits",
    "h_in",
    "h",
    "input_len_cap",
    "threads",
];

impl RunConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.set_at(0, key, value)
    }

    fn set_at(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
        };
        let int = || value.parse::<u64>().map_err(|_| bad());
        let size = || value.parse::<usize>().map_err(|_| bad());
        let p = &mut self.params;
        match key {
            "f.a" => p.f.a = int()?,
            "f.b" => p.f.b = int()?,
            "rho" => p.trie.rho = int()?,
            "kappa" => p.trie.kappa = int()?,
            "max_witness_bits" => p.max_witness_bits = size()?,
            "max_prog_bits" => p.max_prog_bits = size()?,
            "h_in" => p.h_in = size()?,
            "h" => self.h = Some(size()?),
            "input_len_cap" => p.input_len_cap = size()?,
            "threads" => self.threads = Some(size()?),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Reads settings on top of the defaults. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: k + 1 })?;
            cfg.set_at(k + 1, key.trim(), value.trim())?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.h == Some(0) {
            return Err(ConfigError::NonPositive("h"));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::NonPositive("threads"));
        }
        Ok(())
    }

    /// Every key, in [`KEYS`] order; unset optional keys are omitted.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let ComplexityFunction { a, b } = p.f;
        let TrieBoundParams { rho, kappa } = p.trie;
        let mut out = String::new();
        writeln!(out, "f.a={a}\nf.b={b}\nrho={rho}\nkappa={kappa}").unwrap();
        writeln!(out, "max_witness_bits={}", p.max_witness_bits).unwrap();
        writeln!(out, "max_prog_bits={}", p.max_prog_bits).unwrap();
        writeln!(out, "h_in={}", p.h_in).unwrap();
        if let Some(h) = self.h {
            writeln!(out, "h={h}").unwrap();
        }
        writeln!(out, "input_len_cap={}", p.input_len_cap).unwrap();
        if let Some(t) = self.threads {
            writeln!(out, "threads={t}").unwrap();
        }
        out
    }
}
