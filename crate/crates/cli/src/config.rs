//! Line-based `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::CliError;

/// Keys read by every experiment.
pub const COMMON_KEYS: &[&str] = &["seed", "format"];

/// Environment variable supplying the seed when neither the config file nor
/// `--seed` does.
pub const SEED_ENV: &str = "ZEROLAB_SEED";

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Params {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut params = Params::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("config line {}: expected key = value, got {raw:?}", i + 1)))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(invalid(format!("config line {}: empty key", i + 1)));
            }
            if params.values.insert(key.to_string(), v.trim().to_string()).is_some() {
                return Err(invalid(format!("config line {}: duplicate key {key}", i + 1)));
            }
        }
        Ok(params)
    }

    /// Later values win.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Errors on keys the experiment does not know.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        let unknown: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !allowed.contains(k) && !COMMON_KEYS.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(invalid(format!(
                "unknown parameter(s) {}; accepted: {}",
                unknown.join(", "),
                allowed.join(", ")
            )))
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Records the default so the report echoes the value actually used.
    fn or_default<T: ToString>(&mut self, key: &str, default: T) -> String {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| default.to_string())
            .clone()
    }

    pub fn get<T: FromStr + ToString>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        let text = self.or_default(key, default);
        text.parse()
            .map_err(|_| invalid(format!("{key} = {text:?} is not a valid value")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|_| invalid(format!("{key} = {text:?} is not a valid value"))),
        }
    }

    pub fn get_str(&mut self, key: &str, default: &str) -> String {
        self.or_default(key, default)
    }

    pub fn get_bool(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        let text = self.or_default(key, default);
        match text.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(invalid(format!("{key} = {text:?} is not a boolean"))),
        }
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&mut self, key: &str, default: &str) -> Result<Vec<T>, CliError> {
        let text = self.or_default(key, default);
        let items: Result<Vec<T>, _> = text.split(',').map(|s| s.trim().parse::<T>()).collect();
        match items {
            Ok(v) if !v.is_empty() => Ok(v),
            _ => Err(invalid(format!("{key} = {text:?} is not a comma-separated list"))),
        }
    }

    /// `a..b` or `a..=b` (both inclusive), a comma list, or a single value.
    pub fn get_levels(&mut self, key: &str, default: &str) -> Result<Vec<u32>, CliError> {
        let text = self.or_default(key, default);
        let bad = || invalid(format!("{key} = {text:?} is not a level range (e.g. 6..14 or 6,8,10)"));
        if let Some((a, b)) = text.split_once("..") {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().trim_start_matches('=').trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            return Ok((a..=b).collect());
        }
        let items: Result<Vec<u32>, _> = text.split(',').map(|s| s.trim().parse::<u32>()).collect();
        items.map_err(|_| bad())
    }

    pub fn get_range(&mut self, key: &str, default: &str) -> Result<RangeInclusive<u32>, CliError> {
        let levels = self.get_levels(key, default)?;
        let (a, b) = (levels[0], levels[levels.len() - 1]);
        if levels.len() != (b - a + 1) as usize {
            return Err(invalid(format!("{key} must be a contiguous range a..b")));
        }
        Ok(a..=b)
    }
}
