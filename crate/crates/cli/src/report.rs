//! Run reports, tables and their files.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::ExitStatus;

/// One cell of a raw table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // `Display` for f64 is the shortest round-trip form
            Value::Float(v) => write!(f, "{v}"),
            Value::Text(s) if s.contains([',', '"', '\n']) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(v.into())
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Int(v.into())
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_owned())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len(), "table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Builds a table row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::report::Value::from($v)),*]
    };
}

/// Outcome of one acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Acceptance criterion this check belongs to, e.g. `A1`.
    pub criterion: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(criterion: &str, name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            criterion: criterion.to_owned(),
            name: name.to_owned(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "[{}] {} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.detail
        )
    }
}

/// Checks and tables of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Set when a precondition failed and the experiment was aborted.
    pub error: Option<String>,
    #[serde(skip)]
    pub status_on_error: Option<ExitStatus>,
    pub wall_clock_s: f64,
}

impl ExperimentResult {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            checks: Vec::new(),
            tables: Vec::new(),
            error: None,
            status_on_error: None,
            wall_clock_s: 0.0,
        }
    }

    pub fn check(&mut self, criterion: &str, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(criterion, name, passed, detail));
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn status(&self) -> ExitStatus {
        match (&self.error, self.status_on_error) {
            (Some(_), Some(s)) => s,
            (Some(_), None) => ExitStatus::Resource,
            (None, _) if self.passed() => ExitStatus::Pass,
            (None, _) => ExitStatus::AcceptanceFailure,
        }
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self.checks.iter().map(Check::summary_line).collect();
        if let Some(e) = &self.error {
            lines.push(format!("[ERROR] {}: {e}", self.name));
        }
        lines
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub depauw_cli: String,
    pub depauw_core: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            depauw_cli: env!("CARGO_PKG_VERSION").to_owned(),
            depauw_core: depauw_core::VERSION.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub experiments: Vec<ExperimentResult>,
    pub versions: Versions,
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn status(&self) -> ExitStatus {
        self.experiments
            .iter()
            .map(ExperimentResult::status)
            .max()
            .unwrap_or(ExitStatus::Pass)
    }

    /// Writes `report.json` and `<experiment>/<table>.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for exp in &self.experiments {
            if exp.tables.is_empty() {
                continue;
            }
            let sub = dir.join(&exp.name);
            fs::create_dir_all(&sub).with_context(|| format!("creating {}", sub.display()))?;
            for table in &exp.tables {
                let path = sub.join(format!("{}.csv", table.name));
                fs::write(&path, table.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_round_trip_floats() {
        let mut t = Table::new("t", &["a", "b", "c"]);
        t.push(row![0.1 + 0.2, 3u32, "x,y"]);
        t.push(row![1e-20, -2i64, "plain"]);
        let csv = t.to_csv();
        assert_eq!(csv, "a,b,c\n0.30000000000000004,3,\"x,y\"\n0.00000000000000000001,-2,plain\n");
        let back: f64 = csv.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn status_is_the_worst_outcome() {
        let mut ok = ExperimentResult::new("a");
        ok.check("A1", "x", true, "");
        let mut bad = ExperimentResult::new("b");
        bad.check("A2", "y", false, "");
        let report = RunReport {
            config: ExperimentConfig::default(),
            experiments: vec![ok.clone()],
            versions: Versions::default(),
            wall_clock_s: 0.0,
        };
        assert_eq!(report.status(), ExitStatus::Pass);
        let report = RunReport {
            experiments: vec![ok, bad],
            ..report
        };
        assert_eq!(report.status(), ExitStatus::AcceptanceFailure);
    }
}
