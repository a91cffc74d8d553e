//! Scenario configuration: JSON schema with explicitly unit-tagged keys,
//! exhaustive validation (all violations reported, not just the first), and a
//! key-order-independent config hash.
//!
//! Unit conventions: lengths carry an `_m` suffix, angles `_deg` or `_rad`
//! (exactly one of the pair), powers `_dbm`, `_db`, or `_linear` (exactly one
//! of the alternatives). All conversions to radians and linear watts happen
//! here; experiments see linear units only.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

/// Loads and parses a config file into a JSON value.
pub fn load(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: invalid JSON: {e}", path.display()))
}

/// Key-order-independent hash of a config: SHA-256 over the canonical
/// serialization (serde_json maps are sorted), truncated to 16 hex digits.
pub fn config_hash(value: &Value) -> String {
    let canonical = serde_json::to_string(&sorted(value)).expect("JSON value serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn sorted(value: &Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut out = serde_json::Map::new();
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for k in keys {
                out.insert(k.clone(), sorted(&map[k]));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.iter().map(sorted).collect()),
        other => other.clone(),
    }
}

/// Extraction context over a parsed config. Every getter records the paths it
/// consumed and appends a violation message on failure instead of aborting,
/// so a single validation pass reports every problem at once.
pub struct Cfg<'a> {
    root: &'a Value,
    errors: RefCell<Vec<String>>,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Cfg<'a> {
    /// Wraps a parsed config.
    pub fn new(root: &'a Value) -> Self {
        Self {
            root,
            errors: RefCell::new(Vec::new()),
            used: RefCell::new(BTreeSet::new()),
        }
    }

    /// Records a violation.
    pub fn error(&self, msg: impl Into<String>) {
        self.errors.borrow_mut().push(msg.into());
    }

    fn mark_used(&self, path: &str) {
        self.used.borrow_mut().insert(path.to_string());
    }

    fn lookup(&self, path: &str) -> Option<&'a Value> {
        let mut cur = self.root;
        for part in path.split('.') {
            cur = cur.as_object()?.get(part)?;
        }
        Some(cur)
    }

    /// Raw value at a dotted path, marking it consumed.
    pub fn raw(&self, path: &str) -> Option<&'a Value> {
        let v = self.lookup(path);
        if v.is_some() {
            self.mark_used(path);
        }
        v
    }

    /// Required finite number.
    pub fn f64(&self, path: &str) -> Option<f64> {
        match self.raw(path) {
            None => {
                self.error(format!("missing required key '{path}'"));
                None
            }
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.error(format!("'{path}' must be a finite number"));
                    None
                }
            },
        }
    }

    /// Optional finite number with a default.
    pub fn f64_or(&self, path: &str, default: f64) -> Option<f64> {
        match self.raw(path) {
            None => Some(default),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.error(format!("'{path}' must be a finite number"));
                    None
                }
            },
        }
    }

    /// Required unsigned integer.
    pub fn u64(&self, path: &str) -> Option<u64> {
        match self.raw(path) {
            None => {
                self.error(format!("missing required key '{path}'"));
                None
            }
            Some(v) => match v.as_u64() {
                Some(x) => Some(x),
                None => {
                    self.error(format!("'{path}' must be a nonnegative integer"));
                    None
                }
            },
        }
    }

    /// Required positive array length / count.
    pub fn usize(&self, path: &str) -> Option<usize> {
        self.u64(path).map(|v| v as usize)
    }

    /// Optional unsigned integer with a default.
    pub fn usize_or(&self, path: &str, default: usize) -> Option<usize> {
        match self.raw(path) {
            None => Some(default),
            Some(v) => match v.as_u64() {
                Some(x) => Some(x as usize),
                None => {
                    self.error(format!("'{path}' must be a nonnegative integer"));
                    None
                }
            },
        }
    }

    /// Required string.
    pub fn str(&self, path: &str) -> Option<&'a str> {
        match self.raw(path) {
            None => {
                self.error(format!("missing required key '{path}'"));
                None
            }
            Some(v) => match v.as_str() {
                Some(s) => Some(s),
                None => {
                    self.error(format!("'{path}' must be a string"));
                    None
                }
            },
        }
    }

    /// Optional string.
    pub fn str_opt(&self, path: &str) -> Option<&'a str> {
        self.raw(path).and_then(|v| v.as_str())
    }

    /// Required array of finite numbers.
    pub fn arr_f64(&self, path: &str) -> Option<Vec<f64>> {
        match self.raw(path) {
            None => {
                self.error(format!("missing required key '{path}'"));
                None
            }
            Some(v) => self.parse_arr_f64(path, v),
        }
    }

    /// Optional array of finite numbers.
    pub fn arr_f64_opt(&self, path: &str) -> Option<Vec<f64>> {
        let v = self.raw(path)?;
        self.parse_arr_f64(path, v)
    }

    fn parse_arr_f64(&self, path: &str, v: &Value) -> Option<Vec<f64>> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.error(format!("'{path}' must be an array of numbers"));
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            match item.as_f64() {
                Some(x) if x.is_finite() => out.push(x),
                _ => {
                    self.error(format!("'{path}[{i}]' must be a finite number"));
                    return None;
                }
            }
        }
        Some(out)
    }

    /// Required array of unsigned integers.
    pub fn arr_usize(&self, path: &str) -> Option<Vec<usize>> {
        match self.raw(path) {
            None => {
                self.error(format!("missing required key '{path}'"));
                None
            }
            Some(v) => {
                let arr = match v.as_array() {
                    Some(a) => a,
                    None => {
                        self.error(format!("'{path}' must be an array of integers"));
                        return None;
                    }
                };
                let mut out = Vec::with_capacity(arr.len());
                for (i, item) in arr.iter().enumerate() {
                    match item.as_u64() {
                        Some(x) => out.push(x as usize),
                        None => {
                            self.error(format!("'{path}[{i}]' must be a nonnegative integer"));
                            return None;
                        }
                    }
                }
                Some(out)
            }
        }
    }

    /// Unit-tagged angle: exactly one of `<base>_deg` / `<base>_rad` must be
    /// present; degrees are converted to radians here.
    pub fn angle(&self, base: &str) -> Option<f64> {
        self.tagged(base, &[("_deg", |v| v.to_radians()), ("_rad", |v| v)])
    }

    /// Unit-tagged power: exactly one of `<base>_dbm` / `<base>_db` /
    /// `<base>_linear`; dBm converts re 1 mW into watts, dB is a plain
    /// decibel ratio.
    pub fn power(&self, base: &str) -> Option<f64> {
        self.tagged(
            base,
            &[
                ("_dbm", |v| 10f64.powf((v - 30.0) / 10.0)),
                ("_db", |v| 10f64.powf(v / 10.0)),
                ("_linear", |v| v),
            ],
        )
    }

    fn tagged(&self, base: &str, variants: &[(&str, fn(f64) -> f64)]) -> Option<f64> {
        let present: Vec<(String, fn(f64) -> f64)> = variants
            .iter()
            .map(|&(suffix, conv)| (format!("{base}{suffix}"), conv))
            .filter(|(p, _)| self.lookup(p).is_some())
            .collect();
        match present.len() {
            0 => {
                let names: Vec<String> = variants
                    .iter()
                    .map(|(s, _)| format!("'{base}{s}'"))
                    .collect();
                self.error(format!(
                    "missing unit-tagged key: provide exactly one of {}",
                    names.join(" / ")
                ));
                None
            }
            1 => {
                let (path, conv) = &present[0];
                self.f64(path).map(conv)
            }
            _ => {
                for (p, _) in &present {
                    self.mark_used(p);
                }
                let names: Vec<String> = present.iter().map(|(p, _)| format!("'{p}'")).collect();
                self.error(format!(
                    "conflicting unit-tagged keys: {} are mutually exclusive",
                    names.join(" and ")
                ));
                None
            }
        }
    }

    /// Finishes extraction: flags every key present in the config that no
    /// getter consumed, and returns all accumulated violations.
    pub fn finish(self) -> Vec<String> {
        let mut errors = self.errors.into_inner();
        let used = self.used.into_inner();
        let mut present = Vec::new();
        collect_leaf_paths(self.root, String::new(), &mut present);
        for path in present {
            let consumed = used.contains(&path)
                || used
                    .iter()
                    .any(|u| path.starts_with(&format!("{u}.")) || path.starts_with(&format!("{u}[")));
            if !consumed {
                errors.push(format!("unknown key '{path}'"));
            }
        }
        errors
    }
}

fn collect_leaf_paths(value: &Value, prefix: String, out: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                collect_leaf_paths(v, path, out);
            }
        }
        _ => out.push(prefix),
    }
}
