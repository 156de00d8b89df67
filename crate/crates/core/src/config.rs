//! Run configuration: a flat `key = value` text format with dotted keys and
//! optional `[section]` headers, merged with command-line overrides.
//!
//! ```text
//! # fixture
//! [group]
//! p = 3
//! k = 1
//! measure.spec = ball:0,0,0:1
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Every recognised key, the flag that overrides it, and its default.
/// `auto` defaults are resolved per task.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("group.p", "p", "3"),
    ("group.k", "k", "1"),
    ("fan.v", "fan-v", "auto"),
    ("measure.spec", "measure", "auto"),
    ("body.spec", "body", "auto"),
    ("sample.n", "n", "100000"),
    ("sample.seed", "seed", "0"),
    ("solve.multistarts", "multistarts", "auto"),
    ("solve.beta_max", "beta-max", "500"),
    ("solve.tol", "tol", "auto"),
    ("solve.polish_evaluations", "polish-evaluations", "20000"),
    ("oracle.n", "oracle-n", "1000000"),
    ("oracle.seed", "oracle-seed", "0"),
    ("oracle.tol", "oracle-tol", "0.005"),
    ("inscribe.gauge_tol", "gauge-tol", "1e-6"),
    ("motion.identity", "identity", "false"),
    ("motion.rotation", "rotation", ""),
    ("motion.translation", "translation", ""),
    ("run.threads", "threads", "0"),
    ("run.out", "out", ""),
];

/// Effective key/value pairs, always holding every key in [`KEYS`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

impl Default for Config {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, _, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl Config {
    /// Defaults overlaid with the assignments in `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::Parse(format!("line {}: {msg}", no + 1));
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(format!("unterminated section header `{line}`")))?
                    .trim();
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim();
            let full = if section.is_empty() || key.contains('.') {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if !known(&full) {
                return Err(at(format!("unknown key `{full}`")));
            }
            cfg.values.insert(full, value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !known(key) {
            return Err(Error::Parse(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn is_auto(&self, key: &str) -> bool {
        self.get(key) == "auto"
    }

    /// Parses a value, naming the key in the diagnostic.
    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.get(key);
        raw.parse()
            .map_err(|e| Error::Parse(format!("field `{key}`: cannot parse `{raw}`: {e}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

/// Writes the configuration back in the file format, one dotted key per line.
impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_dotted_keys() {
        let cfg = Config::parse("[group]\np = 5 # prime\nk=1\n\nsolve.tol = 1e-7\n[oracle]\nn = 200000\n").unwrap();
        assert_eq!(cfg.get("group.p"), "5");
        assert_eq!(cfg.get("solve.tol"), "1e-7");
        assert_eq!(cfg.get("oracle.n"), "200000");
        assert_eq!(cfg.get("sample.seed"), "0");
    }

    #[test]
    fn diagnostics_name_the_line() {
        let err = Config::parse("group.p = 3\nbogus\n").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = Config::parse("[group]\nq = 3\n").unwrap_err().to_string();
        assert!(err.contains("group.q"), "{err}");
    }

    #[test]
    fn round_trips_through_text() {
        let mut cfg = Config::default();
        cfg.set("fan.v", "1,0.2,0").unwrap();
        assert_eq!(Config::parse(&cfg.to_string()).unwrap(), cfg);
    }

    #[test]
    fn typed_values_report_the_field() {
        let mut cfg = Config::default();
        cfg.set("sample.n", "many").unwrap();
        let err = cfg.parse_value::<usize>("sample.n").unwrap_err().to_string();
        assert!(err.contains("sample.n"), "{err}");
    }
}
