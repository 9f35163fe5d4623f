//! INI-style experiment configuration.
//!
//! The format is flat `key = value` lines grouped under `[section]`
//! headers; `#` and `;` start comments, at line start or (preceded by
//! whitespace) after a value. Every key an experiment does not
//! recognize is an error — typos fail fast with exit code 2 instead of
//! silently running with defaults. Reads are tracked for that purpose:
//! experiments read all their keys up front and then call
//! [`ConfigMap::finish`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{cfg_err, CliError, Result};

#[derive(Debug, Default)]
pub struct ConfigMap {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    consumed: BTreeSet<(String, String)>,
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl ConfigMap {
    /// Parse configuration text. Errors carry 1-based line numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ConfigMap::default();
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| cfg_err(format!("line {line_no}: unterminated section header")))?
                    .trim();
                if !valid_ident(name) {
                    return Err(cfg_err(format!(
                        "line {line_no}: bad section name '{name}' \
                         (lowercase letters, digits, underscores)"
                    )));
                }
                cfg.sections.entry(name.to_string()).or_default();
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {line_no}: expected 'key = value'")))?;
            let key = key.trim();
            // Inline comments: whitespace followed by `#` or `;` ends the value.
            let value = match value.find(|c| c == '#' || c == ';') {
                Some(pos) if value[..pos].ends_with(char::is_whitespace) || pos == 0 => {
                    &value[..pos]
                }
                _ => value,
            };
            let value = value.trim();
            if !valid_ident(key) {
                return Err(cfg_err(format!(
                    "line {line_no}: bad key '{key}' \
                     (lowercase letters, digits, underscores)"
                )));
            }
            let sec = section
                .clone()
                .ok_or_else(|| cfg_err(format!("line {line_no}: key before any [section]")))?;
            let entry = cfg.sections.get_mut(&sec).expect("section exists");
            if entry.insert(key.to_string(), value.to_string()).is_some() {
                return Err(cfg_err(format!(
                    "line {line_no}: duplicate key '{key}' in [{sec}]"
                )));
            }
        }
        Ok(cfg)
    }

    /// Insert or override a value (used for CLI-flag overrides so the
    /// manifest snapshot reflects what actually ran).
    pub fn set(&mut self, section: &str, key: &str, value: impl Display) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
        self.consumed
            .insert((section.to_string(), key.to_string()));
    }

    /// Raw string read; marks the key consumed.
    pub fn get_str(&mut self, section: &str, key: &str) -> Option<String> {
        let v = self.sections.get(section)?.get(key)?.clone();
        self.consumed
            .insert((section.to_string(), key.to_string()));
        Some(v)
    }

    /// Typed read.
    pub fn get<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get_str(section, key) {
            None => Ok(None),
            Some(s) => s.parse::<T>().map(Some).map_err(|_| {
                cfg_err(format!(
                    "[{section}] {key} = '{s}' is not a valid {}",
                    friendly_type::<T>()
                ))
            }),
        }
    }

    /// Typed read with a default.
    pub fn get_or<T: FromStr>(&mut self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    /// Boolean read: true/false, yes/no, on/off, 1/0.
    pub fn get_bool_or(&mut self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get_str(section, key) {
            None => Ok(default),
            Some(s) => match s.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(cfg_err(format!(
                    "[{section}] {key} = '{s}' is not a boolean"
                ))),
            },
        }
    }

    /// Comma-separated list read.
    pub fn get_list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        match self.get_str(section, key) {
            None => Ok(None),
            Some(s) => {
                let mut out = Vec::new();
                for part in s.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    out.push(part.parse::<T>().map_err(|_| {
                        cfg_err(format!(
                            "[{section}] {key}: '{part}' is not a valid {}",
                            friendly_type::<T>()
                        ))
                    })?);
                }
                if out.is_empty() {
                    return Err(cfg_err(format!("[{section}] {key} is an empty list")));
                }
                Ok(Some(out))
            }
        }
    }

    /// Comma-separated list with a default.
    pub fn get_list_or<T: FromStr>(
        &mut self,
        section: &str,
        key: &str,
        default: &[T],
    ) -> Result<Vec<T>>
    where
        T: Clone,
    {
        Ok(self
            .get_list(section, key)?
            .unwrap_or_else(|| default.to_vec()))
    }

    /// Error if any key was never read by the experiment — the unknown-key
    /// guard. Call after all reads.
    pub fn finish(&self) -> Result<()> {
        let mut unknown = Vec::new();
        for (sec, keys) in &self.sections {
            for key in keys.keys() {
                if !self.consumed.contains(&(sec.clone(), key.clone())) {
                    unknown.push(format!("[{sec}] {key}"));
                }
            }
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown config key(s): {}",
                unknown.join(", ")
            )))
        }
    }

    /// Canonical text form of the (possibly overridden) configuration:
    /// sections and keys sorted, one `key = value` per line. This is what
    /// the manifest snapshots and hashes.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (sec, keys) in &self.sections {
            if keys.is_empty() {
                continue;
            }
            out.push_str(&format!("[{sec}]\n"));
            for (k, v) in keys {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

fn friendly_type<T>() -> &'static str {
    let name = std::any::type_name::<T>();
    match name {
        "f64" => "number",
        "u64" | "usize" | "u32" => "nonnegative integer",
        "i64" | "i32" => "integer",
        "alloc::string::String" => "string",
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_types() {
        let text = "# top comment\n[experiment]\nseed = 7\n; another\n[problem]\nn2 = 128  # inline note\nsnr = 2.5\nlist = 1, 2,3 ; paired\nflag = on\n";
        let mut cfg = ConfigMap::parse(text).unwrap();
        assert_eq!(cfg.get::<u64>("experiment", "seed").unwrap(), Some(7));
        assert_eq!(cfg.get_or::<usize>("problem", "n2", 0).unwrap(), 128);
        assert_eq!(cfg.get_or::<f64>("problem", "snr", 0.0).unwrap(), 2.5);
        assert_eq!(
            cfg.get_list::<usize>("problem", "list").unwrap(),
            Some(vec![1, 2, 3])
        );
        assert!(cfg.get_bool_or("problem", "flag", false).unwrap());
        cfg.finish().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut cfg = ConfigMap::parse("[problem]\nn2 = 4\nmystery = 1\n").unwrap();
        let _ = cfg.get::<usize>("problem", "n2").unwrap();
        let err = cfg.finish().unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }

    #[test]
    fn malformed_lines_error_with_line_numbers() {
        assert!(ConfigMap::parse("[sec\n").is_err());
        assert!(ConfigMap::parse("orphan = 1\n").is_err());
        assert!(ConfigMap::parse("[s]\nnot a pair\n").is_err());
        assert!(ConfigMap::parse("[s]\nBadKey = 1\n").is_err());
        assert!(ConfigMap::parse("[s]\nk = 1\nk = 2\n").is_err());
        let err = ConfigMap::parse("[s]\nbroken\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn bad_typed_values_are_config_errors() {
        let mut cfg = ConfigMap::parse("[s]\nx = notanumber\n").unwrap();
        assert!(cfg.get::<f64>("s", "x").is_err());
        let mut cfg = ConfigMap::parse("[s]\nb = maybe\n").unwrap();
        assert!(cfg.get_bool_or("s", "b", false).is_err());
        let mut cfg = ConfigMap::parse("[s]\nl = ,\n").unwrap();
        assert!(cfg.get_list::<f64>("s", "l").is_err());
    }

    #[test]
    fn canonical_text_is_sorted_and_reflects_overrides() {
        let mut cfg = ConfigMap::parse("[b]\nz = 1\na = 2\n[a]\nk = 3\n").unwrap();
        cfg.set("b", "z", 9);
        let text = cfg.canonical_text();
        assert_eq!(text, "[a]\nk = 3\n[b]\na = 2\nz = 9\n");
    }
}
