//! Report assembly and the three output formats.

use std::fmt::Write as _;

use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            pass,
            value: Some(value),
            tolerance: Some(tolerance),
        }
    }

    /// `value <= tolerance`.
    pub fn within(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check::new(name, value <= tolerance, value, tolerance)
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            pass,
            value: None,
            tolerance: None,
        }
    }
}

pub struct Report {
    pub subcommand: &'static str,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    /// Column names and rows for the human and CSV views.
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(subcommand: &'static str, inputs: Value) -> Self {
        Report {
            subcommand,
            inputs,
            results: Value::Null,
            checks: Vec::new(),
            header: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json_value(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "pass": c.pass,
                    "value": c.value.and_then(num),
                    "tolerance": c.tolerance.and_then(num),
                })
            })
            .collect();
        json!({
            "tool": "ricci-forge",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "inputs": self.inputs,
            "results": self.results,
            "checks": checks,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut out = String::new();
                write_json(&mut out, &self.to_json_value(), 0);
                out.push('\n');
                out
            }
            Format::Csv => self.render_csv(),
            Format::Human => self.render_human(),
        }
    }

    fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = "writing CSV to memory cannot fail";
        if !self.header.is_empty() {
            w.write_record(&self.header).expect(io);
            for row in &self.rows {
                w.write_record(row.iter().map(|v| cell(v, true))).expect(io);
            }
        } else {
            w.write_record(["check", "pass", "value", "tolerance"]).expect(io);
            for c in &self.checks {
                w.write_record([
                    c.name.clone(),
                    c.pass.to_string(),
                    c.value.map(float).unwrap_or_default(),
                    c.tolerance.map(float).unwrap_or_default(),
                ])
                .expect(io);
            }
        }
        String::from_utf8(w.into_inner().expect(io)).expect("CSV output is UTF-8")
    }

    fn render_human(&self) -> String {
        let mut out = format!("ricci-forge {}\n", self.subcommand);
        if !self.header.is_empty() {
            let cells: Vec<Vec<String>> = self
                .rows
                .iter()
                .map(|r| r.iter().map(|v| cell(v, false)).collect())
                .collect();
            let widths: Vec<usize> = (0..self.header.len())
                .map(|j| {
                    cells
                        .iter()
                        .map(|r| r.get(j).map_or(0, |s| s.chars().count()))
                        .chain([self.header[j].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |fields: Vec<&str>| {
                let padded: Vec<String> = fields
                    .iter()
                    .zip(&widths)
                    .map(|(f, w)| format!("{f:>w$}"))
                    .collect();
                padded.join("  ").trim_end().to_string()
            };
            out.push_str(&line(self.header.clone()));
            out.push('\n');
            for r in &cells {
                out.push_str(&line(r.iter().map(String::as_str).collect()));
                out.push('\n');
            }
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            let _ = write!(out, "{status}  {}", c.name);
            if let Some(v) = c.value {
                let _ = write!(out, "  value {v:.6e}");
            }
            if let Some(t) = c.tolerance {
                let _ = write!(out, "  tol {t:.1e}");
            }
            out.push('\n');
        }
        out
    }
}

/// JSON number for a finite float; `null` otherwise.
pub fn num(x: f64) -> Option<Value> {
    serde_json::Number::from_f64(x).map(Value::Number)
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell(v: &Value, exact: bool) -> String {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if exact {
                float(x)
            } else {
                format!("{x:.6e}")
            }
        }
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

/// Pretty JSON with every float as 17 significant digits, so equal inputs
/// produce byte-identical files.
pub fn write_json(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Number(n) if n.is_f64() => out.push_str(&float(n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_json(out, item, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let mut s = String::new();
        write_json(&mut s, &json!({"a": 0.1, "b": [1, 2.5], "c": "x"}), 0);
        assert_eq!(
            s,
            "{\n  \"a\": 1.0000000000000001e-1,\n  \"b\": [\n    1,\n    2.5000000000000000e0\n  ],\n  \"c\": \"x\"\n}"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn failed_check_fails_report() {
        let mut r = Report::new("x", Value::Null);
        r.checks.push(Check::within("a", 1.0, 2.0));
        assert!(r.pass());
        r.checks.push(Check::within("b", 3.0, 2.0));
        assert!(!r.pass());
        assert!(r.render(Format::Human).contains("FAIL  b"));
    }
}
