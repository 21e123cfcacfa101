//! Plain-text run reports.
//!
//! A report is a block of `key = value` lines in a fixed order, followed by
//! a `# summary` marker and free-form lines for humans. Floats use 17
//! significant digits, strings are JSON-quoted. Keys under `timing.` are
//! wall-clock measurements and are ignored by [`compare`].

use std::fmt;

use crate::{Error, Result};

pub const HEADER: &str = "# wignerlab report v1";
pub const SUMMARY_MARKER: &str = "# summary";
pub const TIMING_PREFIX: &str = "timing.";

/// Default numeric tolerance for replay comparison.
pub const REPLAY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Float(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    fn parse(raw: &str) -> Result<Value> {
        let raw = raw.trim();
        if raw.starts_with('"') {
            return serde_json::from_str::<String>(raw)
                .map(Value::Text)
                .map_err(|e| Error::parse("value", e.to_string()));
        }
        match raw {
            "true" => return Ok(Value::Bool(true)),
            "false" => return Ok(Value::Bool(false)),
            "inf" => return Ok(Value::Float(f64::INFINITY)),
            "-inf" => return Ok(Value::Float(f64::NEG_INFINITY)),
            "NaN" => return Ok(Value::Float(f64::NAN)),
            _ => {}
        }
        if raw.contains(['.', 'e', 'E']) {
            raw.parse::<f64>().map(Value::Float).map_err(|e| Error::parse("value", e.to_string()))
        } else {
            raw.parse::<i64>().map(Value::Int).map_err(|e| Error::parse("value", e.to_string()))
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) if x.is_nan() => f.write_str("NaN"),
            Value::Float(x) if x.is_infinite() => f.write_str(if *x > 0.0 { "inf" } else { "-inf" }),
            Value::Float(x) => write!(f, "{x:.16e}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => f.write_str(&serde_json::to_string(s).expect("string serialises")),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}
impl From<i64> for Value {
    fn from(x: i64) -> Self {
        Value::Int(x)
    }
}
impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}
impl From<u64> for Value {
    fn from(x: u64) -> Self {
        // seeds above i64::MAX are kept as text so they survive a round trip
        i64::try_from(x).map(Value::Int).unwrap_or_else(|_| Value::Text(x.to_string()))
    }
}
impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}
impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}
impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, Value)>,
    summary: Vec<String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a field. Re-using a key replaces the earlier value in place.
    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        let key = key.into();
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.summary.push(text.into());
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn summary(&self) -> &[String] {
        &self.summary
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(Value::as_f64)
    }

    pub fn get_bool(&self, key: &str) -> Option<bool> {
        self.get(key).and_then(Value::as_bool)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(Value::as_str)
    }

    /// Keys starting with `prefix`, in report order.
    pub fn keys_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().map(|(k, _)| k.as_str()).filter(move |k| k.starts_with(prefix))
    }

    /// The recorded argument vector (`argv.0`, `argv.1`, ...).
    pub fn argv(&self) -> Vec<String> {
        (0..)
            .map_while(|i| self.get_str(&format!("argv.{i}")).map(str::to_string))
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str(SUMMARY_MARKER);
        out.push('\n');
        for l in &self.summary {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Report> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == HEADER => {}
            _ => return Err(Error::parse("header", format!("expected `{HEADER}`"))),
        }
        let mut report = Report::new();
        let mut in_summary = false;
        for (i, line) in lines.enumerate() {
            if in_summary {
                report.summary.push(line.to_string());
                continue;
            }
            if line.trim() == SUMMARY_MARKER {
                in_summary = true;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::parse(format!("line {}", i + 2), "expected `key = value`"))?;
            let value = Value::parse(v).map_err(|e| match e {
                Error::Parse { message, .. } => Error::parse(k.trim(), message),
                other => other,
            })?;
            report.entries.push((k.trim().to_string(), value));
        }
        Ok(report)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub key: String,
    pub expected: Option<Value>,
    pub found: Option<Value>,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<Value>| v.as_ref().map_or("<missing>".to_string(), Value::to_string);
        write!(f, "{}: expected {}, found {}", self.key, show(&self.expected), show(&self.found))
    }
}

fn same(a: &Value, b: &Value, tol: f64) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => {
            if x.is_nan() || y.is_nan() {
                x.is_nan() && y.is_nan()
            } else if x.is_infinite() || y.is_infinite() {
                x == y
            } else {
                (x - y).abs() <= tol
            }
        }
        _ => a == b,
    }
}

/// Field-by-field comparison of two reports, skipping `timing.` keys.
/// Numbers agree within `tol`; everything else must be identical.
pub fn compare(expected: &Report, found: &Report, tol: f64) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for (k, v) in expected.entries.iter().filter(|(k, _)| !k.starts_with(TIMING_PREFIX)) {
        match found.get(k) {
            Some(w) if same(v, w, tol) => {}
            other => out.push(Mismatch { key: k.clone(), expected: Some(v.clone()), found: other.cloned() }),
        }
    }
    for (k, w) in found.entries.iter().filter(|(k, _)| !k.starts_with(TIMING_PREFIX)) {
        if expected.get(k).is_none() {
            out.push(Mismatch { key: k.clone(), expected: None, found: Some(w.clone()) });
        }
    }
    out
}
