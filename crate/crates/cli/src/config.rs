//! Flat `key=value` configuration merged with command-line overrides.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};

/// A problem with the invocation rather than with the data; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses `key=value` lines. Blank lines and `#` comments are ignored;
/// keys may use `-` or `_` interchangeably.
pub fn parse(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(usage(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                i + 1
            )));
        };
        let key = normalize(k.trim());
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(usage(format!(
                "{}:{}: duplicate key {key}",
                path.display(),
                i + 1
            )));
        }
    }
    Ok(map)
}

fn normalize(key: &str) -> String {
    key.replace('-', "_")
}

/// Resolved settings of one command. Every lookup registers its key;
/// [`Settings::finish`] rejects config keys nobody asked for.
pub struct Settings {
    file: BTreeMap<String, String>,
    known: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                parse(&text, p)?
            }
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            known: BTreeSet::new(),
            resolved: BTreeMap::new(),
        })
    }

    /// Command-line value, else config value, else `None`.
    pub fn opt<T>(&mut self, key: &str, cli: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.known.insert(key.to_string());
        let value = match cli {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(
                    s.parse::<T>()
                        .map_err(|e| usage(format!("config key {key}: bad value {s:?}: {e}")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(value)
    }

    pub fn get<T>(&mut self, key: &str, cli: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.opt(key, cli)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn require<T>(&mut self, key: &str, cli: Option<T>) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        self.opt(key, cli)?.ok_or_else(|| {
            usage(format!(
                "missing required setting {key} (flag --{})",
                key.replace('_', "-")
            ))
        })
    }

    pub fn finish(&self) -> Result<()> {
        let unknown: Vec<&str> = self
            .file
            .keys()
            .filter(|k| !self.known.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(usage(format!(
                "unknown config keys: {}",
                unknown.join(", ")
            )))
        }
    }

    /// Resolved values as a config file that reproduces the run.
    pub fn manifest(&self, command: &str) -> String {
        let mut s = format!("# tred {command}\n");
        for (k, v) in &self.resolved {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(text: &str) -> Settings {
        Settings {
            file: parse(text, Path::new("c.cfg")).unwrap(),
            known: BTreeSet::new(),
            resolved: BTreeMap::new(),
        }
    }

    #[test]
    fn precedence() {
        let mut s = settings("# comment\nmax-depth = 4\ntau=2\n");
        assert_eq!(s.get("max_depth", None, 5u32).unwrap(), 4);
        assert_eq!(s.get("tau", Some(9u64), 0).unwrap(), 9);
        assert_eq!(s.get("resolution", None, 64usize).unwrap(), 64);
        assert!(s.finish().is_ok());
        assert_eq!(
            s.manifest("build"),
            "# tred build\nmax_depth=4\nresolution=64\ntau=9\n"
        );
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut s = settings("tau=1\nbogus=3\n");
        s.get("tau", None, 0u64).unwrap();
        assert!(s.finish().unwrap_err().to_string().contains("bogus"));
        let mut s = settings("tau=abc\n");
        assert!(s.get("tau", None, 0u64).is_err());
        assert!(parse("novalue\n", Path::new("c")).is_err());
        assert!(parse("a=1\na=2\n", Path::new("c")).is_err());
        let mut s = settings("");
        assert!(s.require::<String>("input", None).is_err());
    }
}
