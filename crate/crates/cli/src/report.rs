//! Tabular results with CSV and JSON renderings.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Rows share the fixed column schema of their subcommand.
#[derive(Debug, Clone)]
pub struct Report {
    pub subcommand: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Value>>,
    pub checks: Vec<Check>,
    pub metadata: Map<String, Value>,
}

impl Report {
    pub fn new(subcommand: &'static str, columns: &'static [&'static str]) -> Self {
        Self { subcommand, columns, rows: Vec::new(), checks: Vec::new(), metadata: Map::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len(), "{} row width", self.subcommand);
        self.rows.push(row);
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    pub fn meta(&mut self, key: &str, value: Value) {
        self.metadata.insert(key.to_string(), value);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
            .collect();
        json!({
            "subcommand": self.subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "passed": self.passed(),
            "columns": self.columns,
            "rows": rows,
            "checks": self.checks,
            "metadata": self.metadata,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} rows, {}/{} checks passed\n",
            self.subcommand,
            self.rows.len(),
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len()
        );
        for c in &self.checks {
            s.push_str(&format!("  [{}] {}: {}\n", if c.pass { "ok" } else { "FAIL" }, c.name, c.detail));
        }
        s
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// JSON number, or null for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn text(s: impl Into<String>) -> Value {
    Value::String(s.into())
}
