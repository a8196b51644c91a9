//! INI-style configuration merged underneath command-line flags.
//!
//! Keys live in a section named after the subcommand (`[bench]`,
//! `[gen-base]`, ...) or in `[global]`. Lookups try the subcommand section
//! first, then `[global]`. A flag given on the command line always wins.

use std::path::Path;
use std::str::FromStr;

use ini::Ini;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct Config {
    ini: Option<Ini>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let ini = Ini::load_from_file(path).map_err(|e| match e {
            ini::Error::Io(io) => Error::io(path, io),
            ini::Error::Parse(p) => Error::InvalidConfig(format!("{}: {p}", path.display())),
        })?;
        Ok(Config { ini: Some(ini) })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Config { ini: Some(ini) })
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        let ini = self.ini.as_ref()?;
        ini.get_from(Some(section), key).or_else(|| ini.get_from(Some("global"), key))
    }

    /// Parsed value of `key`, or `None` when absent.
    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidConfig(format!("[{section}] {key} = `{v}` is not valid"))),
        }
    }

    /// `flag` if given, else the config value, else `default`.
    pub fn merge<T: FromStr>(&self, flag: Option<T>, section: &str, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(section, key)?.unwrap_or(default)),
        }
    }

    /// Like [`Config::merge`] without a default.
    pub fn merge_opt<T: FromStr>(&self, flag: Option<T>, section: &str, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(section, key),
        }
    }

    /// Comma-separated list value.
    pub fn list(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.raw(section, key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "[global]\nseed = 7\njobs = 2\n\n[bench]\nbudgets = 0.1, 0.7\nseed = 11\n";

    #[test]
    fn flags_win_then_section_then_global() {
        let c = Config::parse(TEXT).unwrap();
        assert_eq!(c.merge(Some(1u64), "bench", "seed", 0).unwrap(), 1);
        assert_eq!(c.merge(None, "bench", "seed", 0u64).unwrap(), 11);
        assert_eq!(c.merge(None, "solve", "seed", 0u64).unwrap(), 7);
        assert_eq!(c.merge(None, "solve", "missing", 3u64).unwrap(), 3);
        assert_eq!(c.list("bench", "budgets").unwrap(), vec!["0.1", "0.7"]);
    }

    #[test]
    fn bad_values_rejected() {
        let c = Config::parse("[global]\njobs = many\n").unwrap();
        assert!(c.get::<usize>("bench", "jobs").is_err());
        assert_eq!(Config::default().get::<usize>("bench", "jobs").unwrap(), None);
    }
}
