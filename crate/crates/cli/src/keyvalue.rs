//! Strict `key = value` configs for the commands that are not experiments.

use std::str::FromStr;

use besselflow::experiments::{parse_list, parse_pairs, parse_value};

use crate::{config_error, Failure, Options, DEFAULT_SEED};

pub struct Entries {
    source: String,
    entries: Vec<(usize, String, String)>,
}

impl Entries {
    /// Reads `--config` if given; an absent file means every key takes its default.
    pub fn load(opts: &Options, allowed: &[&str]) -> Result<Self, Failure> {
        match opts.config_text()? {
            Some((source, text)) => {
                let entries = parse_pairs(&text, allowed).map_err(|e| config_error(&source, e))?;
                Ok(Self { source, entries })
            }
            None => Ok(Self {
                source: "defaults".into(),
                entries: Vec::new(),
            }),
        }
    }

    fn find(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(line, _, v)| (*line, v.as_str()))
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, Failure> {
        match self.find(key) {
            Some((line, v)) => parse_value(line, key, v).map_err(|e| config_error(&self.source, e)),
            None => Ok(default),
        }
    }

    pub fn list(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, Failure> {
        match self.find(key) {
            Some((line, v)) => parse_list(line, key, v).map_err(|e| config_error(&self.source, e)),
            None => Ok(default),
        }
    }

    /// `--seed` beats the file, which beats the fixed default.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64, Failure> {
        match flag {
            Some(s) => Ok(s),
            None => self.get("seed", DEFAULT_SEED),
        }
    }

    /// A validation failure blamed on the line that set `key` (or the file).
    pub fn invalid(&self, key: &str, msg: impl std::fmt::Display) -> Failure {
        let line = self.find(key).map_or(0, |(l, _)| l);
        Failure::Usage(format!("{}:{line}: {msg}", self.source))
    }
}
