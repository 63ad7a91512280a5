//! `key = value` config files merged under command-line flags.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use crate::error::CliError;

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    used: Mutex<BTreeSet<String>>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("config line {}: expected key = value", no + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::Validation(format!(
                    "config key '{key}' given twice"
                )));
            }
        }
        Ok(Settings {
            values,
            used: Mutex::default(),
        })
    }

    /// The flag value if given, else the config value, else `None`.
    pub fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        self.used.lock().unwrap().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Validation(format!("config key '{key}': cannot parse '{v}'"))
            }),
        }
    }

    pub fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    pub fn flag(&self, set: bool, key: &str) -> Result<bool, CliError> {
        Ok(set || self.get(None, key)?.unwrap_or(false))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, flag: Vec<T>, key: &str) -> Result<Option<Vec<T>>, CliError> {
        self.used.lock().unwrap().insert(key.to_string());
        if !flag.is_empty() {
            return Ok(Some(flag));
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<T>, _>>()
                .map(Some)
                .map_err(|_| {
                    CliError::Validation(format!("config key '{key}': cannot parse list '{v}'"))
                }),
        }
    }

    /// Rejects config keys that no resolver asked for.
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.lock().unwrap();
        match self.values.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(CliError::Validation(format!("unknown config key '{k}'"))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let s = Settings::parse("eps = 0.2\n# comment\nmodel=rd  # trailing\n").unwrap();
        assert_eq!(s.get(Some(0.1), "eps").unwrap(), Some(0.1));
        assert_eq!(s.get::<f64>(None, "eps").unwrap(), Some(0.2));
        assert_eq!(
            s.get::<String>(None, "model").unwrap().as_deref(),
            Some("rd")
        );
        assert!(s.finish().is_ok());
    }

    #[test]
    fn unknown_and_malformed_keys() {
        let s = Settings::parse("bogus = 1").unwrap();
        assert!(s.finish().is_err());
        assert!(Settings::parse("no equals sign").is_err());
        let s = Settings::parse("eps = x").unwrap();
        assert!(s.get::<f64>(None, "eps").is_err());
    }

    #[test]
    fn lists() {
        let s = Settings::parse("c = 0.5, 0").unwrap();
        assert_eq!(s.list::<f64>(vec![], "c").unwrap(), Some(vec![0.5, 0.0]));
        assert_eq!(s.list(vec![1.0], "c").unwrap(), Some(vec![1.0]));
    }
}
