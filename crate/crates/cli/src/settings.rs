//! Layered settings: built-in defaults, then a `key = value` config file,
//! then command-line flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use natgrad_lens::io::{parse_key_values, read_text};

use crate::CliError;

/// A key a command understands, with its default (if any).
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, default, help }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
    /// Keys that came from the file or the command line rather than defaults.
    explicit: Vec<String>,
}

impl Settings {
    pub fn resolve(
        keys: &[Key],
        config_path: Option<&Path>,
        overrides: impl IntoIterator<Item = (&'static str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for k in keys {
            if let Some(d) = k.default {
                s.values.insert(k.name.to_string(), d.to_string());
            }
        }
        if let Some(path) = config_path {
            let text = read_text(path)?;
            let kv = parse_key_values(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            for (k, v) in kv {
                if !keys.iter().any(|key| key.name == k) {
                    let known: Vec<&str> = keys.iter().map(|k| k.name).collect();
                    return Err(CliError::Config(format!(
                        "{}: unknown key `{k}` (known: {})",
                        path.display(),
                        known.join(", ")
                    )));
                }
                s.set(k, v);
            }
        }
        for (k, v) in overrides {
            if let Some(v) = v {
                s.set(k.to_string(), v);
            }
        }
        Ok(s)
    }

    fn set(&mut self, k: String, v: String) {
        if !self.explicit.contains(&k) {
            self.explicit.push(k.clone());
        }
        self.values.insert(k, v);
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self
            .raw(key)
            .ok_or_else(|| CliError::Config(format!("missing setting `{key}`")))?;
        raw.parse()
            .map_err(|_| CliError::Config(format!("setting `{key}`: cannot parse `{raw}`")))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key).map(|_| self.get(key)).transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(CliError::Config(format!("setting `{key}`: `{v}` is not a boolean"))),
        }
    }

    pub fn vector(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key)
            .map(|v| parse_vector(v).map_err(|e| CliError::Config(format!("setting `{key}`: {e}"))))
            .transpose()
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// Comma- or whitespace-separated numbers.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

/// Rows separated by `;`, entries as in [`parse_vector`].
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>, String> {
    let rows: Vec<Vec<f64>> = s.split(';').map(parse_vector).collect::<Result<_, _>>()?;
    let n = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err("matrix rows must be non-empty and of equal length".into());
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[Key] = &[
        key("dt", Some("0.001"), ""),
        key("dim", Some("2"), ""),
        key("a", None, ""),
    ];

    #[test]
    fn command_line_beats_file_beats_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        std::fs::write(&p, "dt = 0.01\ndim = 3\n").unwrap();
        let s = Settings::resolve(KEYS, Some(&p), [("dim", Some("5".to_string())), ("a", None)]).unwrap();
        assert_eq!(s.get::<f64>("dt").unwrap(), 0.01);
        assert_eq!(s.get::<usize>("dim").unwrap(), 5);
        assert!(s.raw("a").is_none());
        assert!(s.is_explicit("dt") && !s.is_explicit("a"));

        std::fs::write(&p, "dx = 1\n").unwrap();
        assert!(Settings::resolve(KEYS, Some(&p), []).is_err());
    }

    #[test]
    fn parses_matrices() {
        assert_eq!(
            parse_matrix("-1, 2; 0 -1").unwrap(),
            vec![vec![-1.0, 2.0], vec![0.0, -1.0]]
        );
        assert!(parse_matrix("1,2;3").is_err());
        assert!(parse_vector("1,x").is_err());
    }
}
