//! Flat `key = value` config files. Flags given on the command line take
//! precedence over file values, which take precedence over built-in defaults.

use crate::error::{CliError, Result};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

/// Keys recognised in config files; anything else is rejected so typos do
/// not pass silently.
const KNOWN_KEYS: &[&str] = &[
    "seed",
    "threads",
    "src",
    "out",
    "data",
    "checkpoint",
    "history",
    "epochs",
    "batch_size",
    "learning_rate",
    "rho",
    "epsilon",
    "split",
    "threshold",
    "predictions",
    "image",
    "method",
    "segments",
    "samples",
    "kernel_width",
    "ridge",
    "features",
    "exact_threshold",
    "patch",
    "stride",
    "logit",
    "n",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "line {}: expected key = value",
                    n + 1
                )));
            };
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::usage(format!(
                    "line {}: unknown key `{key}`",
                    n + 1
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    /// `flag`, else the file value for `key`, else `None`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| {
                CliError::usage(format!("config key `{key}`: invalid value `{v}`: {e}"))
            }),
        }
    }

    pub fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.pick(flag, key)?.ok_or_else(|| {
            CliError::usage(format!(
                "missing required option --{}",
                key.replace('_', "-")
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let c =
            ConfigFile::parse("# comment\nepochs = 5\nlearning-rate=0.01  # trailing\n\n").unwrap();
        assert_eq!(c.pick_or(None, "epochs", 30usize).unwrap(), 5);
        assert_eq!(c.pick_or(Some(7usize), "epochs", 30).unwrap(), 7);
        assert_eq!(c.pick_or(None, "learning_rate", 1.0f64).unwrap(), 0.01);
        assert_eq!(c.pick_or(None, "batch_size", 20usize).unwrap(), 20);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("epochs 5").is_err());
        assert!(ConfigFile::parse("epoch = 5").is_err());
        let c = ConfigFile::parse("epochs = many").unwrap();
        assert!(c.pick::<usize>(None, "epochs").is_err());
    }
}
