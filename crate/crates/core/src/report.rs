//! Verification reports and their canonical serializations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One measured quantity compared against its expected value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub description: String,
    pub measured: Option<f64>,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// `pass` is `|measured - expected| <= tolerance`; a non-finite measurement fails.
    pub fn new(id: impl Into<String>, description: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        let pass = measured.is_finite() && (measured - expected).abs() <= tolerance;
        CheckRecord {
            id: id.into(),
            description: description.into(),
            measured: measured.is_finite().then_some(measured),
            expected,
            tolerance,
            pass,
        }
    }

    /// A boolean outcome recorded as measured 1 or 0 against expected 1.
    pub fn flag(id: impl Into<String>, description: impl Into<String>, ok: bool) -> Self {
        Self::new(id, description, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub tool: String,
    pub version: String,
}

impl Default for Stamp {
    fn default() -> Self {
        Stamp { tool: "pbs".into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    /// Metadata only; not part of any determinism comparison.
    pub stamp: Stamp,
    pub config: Option<Value>,
    pub checks: Vec<CheckRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Md,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "md" => Ok(Format::Md),
            other => Err(format!("unknown format '{other}' (expected json, csv or md)")),
        }
    }
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        VerificationReport { suite: suite.into(), stamp: Stamp::default(), config: None, checks: Vec::new() }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// Sort checks by id so concurrent producers give a stable document.
    pub fn sort(&mut self) {
        self.checks.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn emit(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Json => self.to_canonical_json().into_bytes(),
            Format::Csv => self.to_csv(),
            Format::Md => self.to_markdown().into_bytes(),
        }
    }

    /// Stable key order, floats with 17 significant digits, two-space indent.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("report serializes"))
    }

    fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "description", "measured", "expected", "tolerance", "pass"])
            .expect("in-memory write");
        for c in &self.checks {
            w.write_record([
                c.id.clone(),
                c.description.clone(),
                c.measured.map(fmt_f64).unwrap_or_default(),
                fmt_f64(c.expected),
                fmt_f64(c.tolerance),
                c.pass.to_string(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    fn to_markdown(&self) -> String {
        let mut s = format!("# {}\n\n", self.suite);
        let failed = self.failures().count();
        let _ = writeln!(s, "{} checks, {} failed\n", self.checks.len(), failed);
        s.push_str("| id | measured | expected | tolerance | pass |\n|---|---|---|---|---|\n");
        for c in &self.checks {
            let measured = c.measured.map(fmt_f64).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                c.id,
                measured,
                fmt_f64(c.expected),
                fmt_f64(c.tolerance),
                if c.pass { "yes" } else { "NO" }
            );
        }
        s
    }
}

/// Any JSON value in the canonical layout used for reports.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}
