//! Flat key=value config files with `[section]` headers.
//!
//! Every getter records the key it touched; after a command has read its
//! whole schema, [`Config::finish`] rejects any key that nothing asked for,
//! so typos fail loudly instead of silently running defaults. Getters with
//! defaults also log where the value came from, which ends up in the output
//! headers.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, serde::Serialize)]
pub struct CapNote {
    pub key: String,
    pub value: String,
    pub source: &'static str,
}

#[derive(Debug)]
pub struct Config {
    entries: BTreeMap<String, String>,
    sha256: String,
    used: RefCell<BTreeSet<String>>,
    caps: RefCell<Vec<CapNote>>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| bad(format!("config {} is not UTF-8", path.display())))?;
        let sha256 = format!("{:x}", Sha256::digest(&bytes));
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| bad(format!("line {}: unterminated section header", lineno + 1)))?
                    .trim();
                if name.is_empty() {
                    return Err(bad(format!("line {}: empty section name", lineno + 1)));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key = value, got '{line}'", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(bad(format!("line {}: empty key", lineno + 1)));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(bad(format!("duplicate config key '{full}'")));
            }
        }
        Ok(Config {
            entries,
            sha256,
            used: RefCell::new(BTreeSet::new()),
            caps: RefCell::new(Vec::new()),
        })
    }

    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    /// Echo of every entry, for output headers.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| bad(format!("missing config key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(key: &str, value: &str, want: &str) -> Result<T, CliError> {
        value
            .parse()
            .map_err(|_| bad(format!("config key '{key}': expected {want}, got '{value}'")))
    }

    fn note(&self, key: &str, value: impl Display, source: &'static str) {
        self.caps.borrow_mut().push(CapNote {
            key: key.to_string(),
            value: value.to_string(),
            source,
        });
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        Self::parse(key, self.require(key)?, "a number")
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        Self::parse(key, self.require(key)?, "a non-negative integer")
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|v| Self::parse(key, v, "a number"))
            .transpose()
    }

    pub fn opt_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key)
            .map(|v| Self::parse(key, v, "a non-negative integer"))
            .transpose()
    }

    pub fn opt_str(&self, key: &str) -> Option<String> {
        self.get(key).map(str::to_string)
    }

    /// String with a default; both outcomes are logged for the header.
    pub fn or_str(&self, key: &str, default: &str) -> String {
        match self.get(key) {
            Some(v) => {
                self.note(key, v, "config");
                v.to_string()
            }
            None => {
                self.note(key, default, "default");
                default.to_string()
            }
        }
    }

    pub fn or_f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            Some(v) => {
                let x = Self::parse(key, v, "a number")?;
                self.note(key, x, "config");
                Ok(x)
            }
            None => {
                self.note(key, default, "default");
                Ok(default)
            }
        }
    }

    pub fn or_usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            Some(v) => {
                let x = Self::parse(key, v, "a non-negative integer")?;
                self.note(key, x, "config");
                Ok(x)
            }
            None => {
                self.note(key, default, "default");
                Ok(default)
            }
        }
    }

    pub fn or_u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            Some(v) => {
                let x = Self::parse(key, v, "a non-negative integer")?;
                self.note(key, x, "config");
                Ok(x)
            }
            None => {
                self.note(key, default, "default");
                Ok(default)
            }
        }
    }

    pub fn or_bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            Some(v) => {
                let x = Self::parse(key, v, "true or false")?;
                self.note(key, x, "config");
                Ok(x)
            }
            None => {
                self.note(key, default, "default");
                Ok(default)
            }
        }
    }

    /// Comma-separated numbers; must be non-empty.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.require(key)?;
        let items: Result<Vec<f64>, CliError> = raw
            .split(',')
            .map(|s| Self::parse(key, s.trim(), "a number"))
            .collect();
        let items = items?;
        if items.is_empty() {
            return Err(bad(format!("config key '{key}' must list at least one value")));
        }
        Ok(items)
    }

    pub fn opt_u64_list(&self, key: &str) -> Result<Option<Vec<u64>>, CliError> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|s| Self::parse(key, s.trim(), "a non-negative integer"))
            .collect::<Result<Vec<u64>, CliError>>()
            .map(Some)
    }

    /// Semicolon-separated vectors of whitespace-separated numbers.
    pub fn vectors(&self, key: &str) -> Result<Vec<Vec<f64>>, CliError> {
        let raw = self.require(key)?;
        raw.split(';')
            .map(|chunk| {
                chunk
                    .split_whitespace()
                    .map(|s| Self::parse(key, s, "a number"))
                    .collect()
            })
            .collect()
    }

    /// Comma-separated group words; each word is whitespace-separated
    /// generator labels, with the bare word `e` for the identity.
    pub fn words(&self, key: &str, default: &str) -> Result<Vec<Vec<String>>, CliError> {
        let raw = self.or_str(key, default);
        let mut out = Vec::new();
        for word in raw.split(',') {
            let labels: Vec<String> = word.split_whitespace().map(str::to_string).collect();
            if labels.is_empty() {
                return Err(bad(format!("config key '{key}': empty word in list")));
            }
            if labels == ["e"] {
                out.push(Vec::new());
            } else {
                out.push(labels);
            }
        }
        Ok(out)
    }

    pub fn caps(&self) -> Vec<CapNote> {
        let mut caps = self.caps.borrow().clone();
        caps.sort_by(|a, b| a.key.cmp(&b.key));
        caps
    }

    /// Reject keys that no getter asked for.
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .entries
            .keys()
            .filter(|k| !used.contains(*k))
            .map(|k| k.as_str())
            .collect();
        match unknown.len() {
            0 => Ok(()),
            1 => Err(bad(format!("unknown config key '{}'", unknown[0]))),
            _ => Err(bad(format!("unknown config keys '{}'", unknown.join("', '")))),
        }
    }
}
