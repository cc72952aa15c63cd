//! Flat `section.key=value` configuration.
//!
//! Sources are layered: built-in defaults, then a config file, then `--set`
//! pairs and explicit flags. Every value a command reads is recorded so the
//! manifest can echo the full effective configuration.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key=value` lines. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = split_pair(line)
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key=value, got '{line}'", lineno + 1)))?;
            cfg.values.insert(k.to_string(), v.to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.values.insert(key.into(), value.into());
    }

    /// Applies a `KEY=VALUE` override; a bare key is placed in `section`.
    pub fn set_pair(&mut self, section: &str, pair: &str) -> CliResult<()> {
        let (k, v) = split_pair(pair).ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got '{pair}'")))?;
        let key = if k.contains('.') { k.to_string() } else { format!("{section}.{k}") };
        self.values.insert(key, v.to_string());
        Ok(())
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys_in(&self, section: &str) -> impl Iterator<Item = &str> {
        let prefix = format!("{section}.");
        self.values
            .keys()
            .filter(move |k| k.starts_with(&prefix))
            .map(String::as_str)
    }

    /// Sorted `key=value` lines, loadable by [`Config::parse`].
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k, v.trim()))
}

/// Typed reads from one section, recording what was used.
pub struct Resolver<'a> {
    cfg: &'a Config,
    section: &'static str,
    used: Config,
}

impl<'a> Resolver<'a> {
    pub fn new(cfg: &'a Config, section: &'static str) -> Self {
        Self {
            cfg,
            section,
            used: Config::new(),
        }
    }

    fn key(&self, name: &str) -> String {
        format!("{}.{name}", self.section)
    }

    fn parse_value<T: FromStr>(&self, key: &str, raw: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        raw.parse()
            .map_err(|e| CliError::usage(format!("invalid value '{raw}' for {key}: {e}")))
    }

    pub fn get<T: FromStr + Display>(&mut self, name: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        let key = self.key(name);
        let v = match self.cfg.get_raw(&key) {
            Some(raw) => self.parse_value(&key, raw)?,
            None => default,
        };
        self.used.set(key, v.to_string());
        Ok(v)
    }

    pub fn optional<T: FromStr + Display>(&mut self, name: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        let key = self.key(name);
        match self.cfg.get_raw(&key) {
            Some(raw) if !raw.is_empty() => {
                let v: T = self.parse_value(&key, raw)?;
                self.used.set(key, v.to_string());
                Ok(Some(v))
            }
            _ => Ok(None),
        }
    }

    pub fn required<T: FromStr + Display>(&mut self, name: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        self.optional(name)?
            .ok_or_else(|| CliError::usage(format!("missing required setting {}", self.key(name))))
    }

    pub fn path(&mut self, name: &str) -> CliResult<PathBuf> {
        self.required::<String>(name).map(PathBuf::from)
    }

    pub fn optional_path(&mut self, name: &str) -> CliResult<Option<PathBuf>> {
        Ok(self.optional::<String>(name)?.map(PathBuf::from))
    }

    /// Fails on keys of this section that were never read.
    pub fn finish(self) -> CliResult<Config> {
        let unknown: Vec<&str> = self
            .cfg
            .keys_in(self.section)
            .filter(|k| self.used.get_raw(k).is_none() && !self.cfg.get_raw(k).is_some_and(str::is_empty))
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::usage(format!("unknown setting(s): {}", unknown.join(", "))));
        }
        Ok(self.used)
    }
}
