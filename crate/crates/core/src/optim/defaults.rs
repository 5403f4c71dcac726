use std::collections::BTreeMap;
use std::sync::OnceLock;

use thiserror::Error;

const BUILTIN: &str = include_str!("defaults.conf");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DefaultsError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: key `{key}` set twice")]
    Duplicate { key: String, line: usize },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: cannot read `{value}`")]
    Invalid { key: String, value: String },
}

/// Parsed `key = value` hyperparameter file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Defaults {
    values: BTreeMap<String, String>,
}

impl Defaults {
    /// The defaults compiled into the crate.
    pub fn builtin() -> &'static Defaults {
        static PARSED: OnceLock<Defaults> = OnceLock::new();
        PARSED.get_or_init(|| Defaults::parse(BUILTIN).expect("builtin defaults parse"))
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    pub fn parse(text: &str) -> Result<Self, DefaultsError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(DefaultsError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(DefaultsError::Syntax { line: i + 1 });
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(DefaultsError::Duplicate {
                    key: key.to_string(),
                    line: i + 1,
                });
            }
        }
        Ok(Self { values })
    }

    /// Keys of `other` replace those of `self`.
    pub fn overlay(&self, other: &Defaults) -> Defaults {
        let mut values = self.values.clone();
        values.extend(other.values.clone());
        Defaults { values }
    }

    pub fn raw(&self, key: &str) -> Result<&str, DefaultsError> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| DefaultsError::Missing(key.to_string()))
    }

    fn invalid(key: &str, value: &str) -> DefaultsError {
        DefaultsError::Invalid {
            key: key.to_string(),
            value: value.to_string(),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, DefaultsError> {
        let v = self.raw(key)?;
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Self::invalid(key, v))
    }

    /// `none` reads as `None`.
    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, DefaultsError> {
        match self.raw(key)? {
            "none" => Ok(None),
            _ => self.f64(key).map(Some),
        }
    }

    pub fn bool(&self, key: &str) -> Result<bool, DefaultsError> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| Self::invalid(key, v))
    }

    pub fn u64(&self, key: &str) -> Result<u64, DefaultsError> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| Self::invalid(key, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}
