use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;

/// Keys accepted in a config file. They mirror the long flag names.
pub const KEYS: &[&str] = &[
    "learner",
    "k",
    "loss",
    "eta",
    "epochs",
    "restarts",
    "models",
    "minibatch-fraction",
    "lambda-l1",
    "fused",
    "lambda-fused",
    "seed",
    "task",
    "target",
    "method",
    "cv-folds",
    "population",
    "max-iterations",
    "lambda-grid",
    "problems",
    "methods",
    "learners",
];

/// Flat `key = value` settings file. Blank lines and lines starting with
/// `#` are skipped. A value set on the command line always wins.
#[derive(Debug, Default)]
pub struct Config {
    path: Option<PathBuf>,
    values: BTreeMap<String, (String, usize)>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = format!("{}:{}", path.display(), i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{loc}: expected `key = value`"))?;
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                bail!("{loc}: unknown key `{key}`");
            }
            if values.insert(key.clone(), (value.trim().to_string(), i + 1)).is_some() {
                bail!("{loc}: `{key}` set twice");
            }
        }
        Ok(Config {
            path: Some(path.to_path_buf()),
            values,
        })
    }

    fn parsed<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>> {
        let Some((raw, line)) = self.values.get(key) else {
            return Ok(None);
        };
        let path = self.path.as_deref().unwrap_or(Path::new("config"));
        parse(raw)
            .map(Some)
            .map_err(|e| anyhow!("{}:{line}: bad value for `{key}`: {e}", path.display()))
    }

    pub fn opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.parsed(key, |s| s.parse::<T>().map_err(|e| e.to_string())),
        }
    }

    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn choice<T: ValueEnum>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.parsed(key, |s| T::from_str(s, true))?.unwrap_or(default)),
        }
    }
}
