//! Canonical `key=value` text shared by config files, synthetic-field specs,
//! and artifact headers.
//!
//! One entry per line, `#` starts a comment line, keys are unique. Real values
//! are written with Rust's shortest round-trip formatting so a header parses
//! back to the identical bits.

use std::collections::HashSet;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvDoc {
    entries: Vec<(String, String)>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.' || b == b'-')
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDoc::new();
        let mut seen = HashSet::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("line {}: expected key=value, got `{line}`", lineno + 1))
            })?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(Error::invalid(format!("line {}: bad key `{key}`", lineno + 1)));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::invalid(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            doc.entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(doc)
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        debug_assert!(valid_key(key), "{key}");
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_reals(&mut self, key: &str, values: &[f64]) {
        self.push(key, format_reals(values));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Tracks which keys were consumed so leftovers can be reported.
    pub fn reader(&self) -> KvReader<'_> {
        KvReader {
            doc: self,
            used: HashSet::new(),
        }
    }
}

pub struct KvReader<'a> {
    doc: &'a KvDoc,
    used: HashSet<&'a str>,
}

impl<'a> KvReader<'a> {
    pub fn raw(&mut self, key: &str) -> Option<&'a str> {
        let (k, v) = self.doc.entries.iter().find(|(k, _)| k == key)?;
        self.used.insert(k.as_str());
        Some(v.as_str())
    }

    pub fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(format!("key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn req<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.opt(key)?
            .ok_or_else(|| Error::invalid(format!("missing key `{key}`")))
    }

    pub fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn flag(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "on" | "1" | "yes") => Ok(true),
            Some("false" | "off" | "0" | "no") => Ok(false),
            Some(v) => Err(Error::invalid(format!("key `{key}`: expected on/off, got `{v}`"))),
        }
    }

    pub fn reals(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key)
            .map(|v| parse_list(v).map_err(|e| Error::invalid(format!("key `{key}`: {e}"))))
            .transpose()
    }

    pub fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| parse_list(v).map_err(|e| Error::invalid(format!("key `{key}`: {e}"))))
            .transpose()
    }

    /// Fails on any key that was never read.
    pub fn finish(self) -> Result<()> {
        let unknown: Vec<&str> = self
            .doc
            .keys()
            .filter(|k| !self.used.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(format!("unknown key(s): {}", unknown.join(", "))))
        }
    }
}

pub fn format_reals(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    parts.join(",")
}

fn parse_list<T: FromStr>(text: &str) -> std::result::Result<Vec<T>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse().map_err(|_| format!("cannot parse list element `{s}`"))
        })
        .collect()
}
