//! Flat dotted-key run configuration: defaults, then a JSON file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::failure::{CliResult, Classify, Failure};

#[derive(Debug, Clone)]
pub struct Settings {
    values: BTreeMap<String, Value>,
}

fn same_type(a: &Value, b: &Value) -> bool {
    matches!(
        (a, b),
        (Value::Number(_), Value::Number(_)) | (Value::String(_), Value::String(_)) | (Value::Bool(_), Value::Bool(_))
    )
}

impl Settings {
    pub fn new(defaults: Vec<(&str, Value)>) -> Self {
        Self {
            values: defaults.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// Type-checked assignment; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: Value) -> CliResult<()> {
        let Some(slot) = self.values.get_mut(key) else {
            let known: Vec<&str> = self.values.keys().map(String::as_str).collect();
            return Err(Failure::config(format!(
                "unknown config key {key:?} (known: {})",
                known.join(", ")
            )));
        };
        if !same_type(slot, &value) {
            return Err(Failure::config(format!("config key {key:?} expects a value like {slot}, got {value}")));
        }
        *slot = value;
        Ok(())
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl Into<Value>>) -> CliResult<()> {
        match value {
            Some(v) => self.set(key, v.into()),
            None => Ok(()),
        }
    }

    /// Parses `key=value`, reading the value with the type of the key's default.
    pub fn assign(&mut self, assignment: &str) -> CliResult<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("expected key=value, got {assignment:?}")))?;
        let key = key.trim();
        let current = self
            .values
            .get(key)
            .ok_or_else(|| Failure::config(format!("unknown config key {key:?}")))?;
        let bad = || Failure::config(format!("cannot read {raw:?} as the type of {key:?}"));
        let value = match current {
            Value::Number(_) => {
                let n = if let Ok(u) = raw.trim().parse::<u64>() {
                    Number::from(u)
                } else {
                    raw.trim().parse::<f64>().ok().and_then(Number::from_f64).ok_or_else(bad)?
                };
                Value::Number(n)
            }
            Value::Bool(_) => Value::Bool(raw.trim().parse().map_err(|_| bad())?),
            _ => Value::String(raw.to_string()),
        };
        self.set(key, value)
    }

    pub fn merge_file(&mut self, path: &Path) -> CliResult<()> {
        let text = fs::read_to_string(path).or_config(&format!("reading {}", path.display()))?;
        let parsed: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let Value::Object(map) = parsed else {
            return Err(Failure::config(format!("{}: expected a JSON object", path.display())));
        };
        for (key, value) in map {
            self.set(&key, value)?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> &Value {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("setting {key:?} has no default"))
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        self.get(key)
            .as_f64()
            .ok_or_else(|| Failure::config(format!("{key} must be a number")))
    }

    pub fn u64(&self, key: &str) -> CliResult<u64> {
        self.get(key)
            .as_u64()
            .ok_or_else(|| Failure::config(format!("{key} must be a non-negative integer")))
    }

    pub fn usize(&self, key: &str) -> CliResult<usize> {
        Ok(self.u64(key)? as usize)
    }

    pub fn str(&self, key: &str) -> CliResult<&str> {
        self.get(key)
            .as_str()
            .ok_or_else(|| Failure::config(format!("{key} must be a string")))
    }

    pub fn bool(&self, key: &str) -> CliResult<bool> {
        self.get(key)
            .as_bool()
            .ok_or_else(|| Failure::config(format!("{key} must be true or false")))
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.values.clone().into_iter().collect::<Map<_, _>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> Settings {
        Settings::new(vec![("seed", json!(0)), ("lambda", json!(1e-4)), ("solver", json!("mccf"))])
    }

    #[test]
    fn assignment_follows_default_type() {
        let mut s = sample();
        s.assign("seed=7").unwrap();
        s.assign("lambda=0.5").unwrap();
        s.assign("solver=lc-lcf").unwrap();
        assert_eq!(s.u64("seed").unwrap(), 7);
        assert_eq!(s.f64("lambda").unwrap(), 0.5);
        assert_eq!(s.str("solver").unwrap(), "lc-lcf");
        assert!(s.assign("lambda=abc").is_err());
        assert!(s.assign("nope=1").is_err());
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"seed": 3, "solver": "lc-lcf"}"#).unwrap();
        let mut s = sample();
        s.merge_file(&path).unwrap();
        s.set_opt("seed", Some(5)).unwrap();
        assert_eq!(s.u64("seed").unwrap(), 5);
        assert_eq!(s.str("solver").unwrap(), "lc-lcf");
        fs::write(&path, r#"{"solver": 3}"#).unwrap();
        assert!(sample().merge_file(&path).is_err());
    }
}
