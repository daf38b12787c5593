use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub const REPORT_FORMAT_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.into())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // Debug keeps a decimal point or exponent, so floats stay floats
            Value::Float(v) => write!(f, "{v:?}"),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Text(s) => write!(f, "{}", serde_json::Value::String(s.clone())),
        }
    }
}

impl Value {
    fn parse(s: &str) -> Option<Value> {
        if s.starts_with('"') {
            return serde_json::from_str::<String>(s).ok().map(Value::Text);
        }
        match s {
            "true" => return Some(Value::Bool(true)),
            "false" => return Some(Value::Bool(false)),
            _ => {}
        }
        if let Ok(i) = s.parse::<i64>() {
            return Some(Value::Int(i));
        }
        s.parse::<f64>().ok().map(Value::Float)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }
}

/// Ordered `key = value` document.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        let mut r = Report::default();
        r.set("format_version", REPORT_FORMAT_VERSION);
        r
    }

    /// Insert or replace `key`.
    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        assert!(
            !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || "_.-".contains(c)),
            "bad report key {key:?}"
        );
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_f64)
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn extend(&mut self, prefix: &str, other: &Report) {
        for (k, v) in &other.entries {
            if k != "format_version" {
                self.set(&format!("{prefix}.{k}"), v.clone());
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Report::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::MalformedTable { line: i + 1, message };
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| bad("expected `key = value`".into()))?;
            let value = Value::parse(v.trim()).ok_or_else(|| bad(format!("bad value {v:?}")))?;
            r.entries.push((k.trim().to_string(), value));
        }
        Ok(r)
    }

    /// Aligned two-column view for terminals.
    pub fn table(&self) -> String {
        let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in &self.entries {
            let v = match v {
                Value::Float(x) => format!("{x:.6}"),
                Value::Text(s) => s.clone(),
                other => other.to_string(),
            };
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }

    /// The report as one JSON object on a single line.
    pub fn summary_line(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("value serializes")))
            .collect();
        serde_json::Value::Object(map).to_string()
    }
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut r = Report::new();
        r.set("a.int", 3u64);
        r.set("a.float", 2.0);
        r.set("tiny", 1e-300);
        r.set("flag", true);
        r.set("name", "z \"quoted\" = x");
        assert_eq!(Report::parse(&r.to_string()).unwrap(), r);
        assert_eq!(r.get("a.float"), Some(&Value::Float(2.0)));
    }

    #[test]
    fn set_replaces() {
        let mut r = Report::new();
        r.set("x", 1u64);
        r.set("x", 2u64);
        assert_eq!(r.entries().len(), 2);
        assert_eq!(r.get_f64("x"), Some(2.0));
    }

    #[test]
    fn summary_is_one_json_line() {
        let mut r = Report::new();
        r.set("g2", 0.004);
        let s = r.summary_line();
        assert!(!s.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["g2"], 0.004);
    }

    #[test]
    fn malformed_lines() {
        assert!(Report::parse("x 1\n").is_err());
        assert!(Report::parse("x = [1]\n").is_err());
    }
}
