//! Assertions, experiment outcomes and the files written for them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use conelab_core::report::{csv_table, Provenance};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{Format, RunConfig};

/// One checked invariant. `value` and `limit` are informational; `passed`
/// is what counts. Non-finite numbers serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Assertion {
    /// `value < limit`.
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: value < limit, value: finite(value), limit: finite(limit), detail: format!("{value:e} < {limit:e}") }
    }

    /// `value <= limit`, for bounds that may be attained.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: value <= limit, value: finite(value), limit: finite(limit), detail: format!("{value:e} <= {limit:e}") }
    }

    /// `value >= limit`.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: value >= limit, value: finite(value), limit: finite(limit), detail: format!("{value:e} >= {limit:e}") }
    }

    /// `|value - target| < tol`.
    pub fn close(name: &str, value: f64, target: f64, tol: f64) -> Self {
        let err = (value - target).abs();
        Self {
            name: name.into(),
            passed: err < tol,
            value: finite(value),
            limit: finite(tol),
            detail: format!("|{value:e} - {target:e}| = {err:e} < {tol:e}"),
        }
    }

    /// `|value/target - 1| < tol`.
    pub fn close_rel(name: &str, value: f64, target: f64, tol: f64) -> Self {
        let err = (value / target - 1.0).abs();
        Self {
            name: name.into(),
            passed: err < tol,
            value: finite(value),
            limit: finite(tol),
            detail: format!("relative error {err:e} against {target:e}, tolerance {tol:e}"),
        }
    }

    pub fn holds(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: ok, value: None, limit: None, detail: detail.into() }
    }
}

/// A CSV trace attached to an outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(file: &str, columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self { file: file.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows }
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub provenance: Provenance,
    pub report: Value,
    pub traces: Vec<Trace>,
    pub assertions: Vec<Assertion>,
}

impl Outcome {
    pub fn new(experiment: &str, theorem: &str, cone: String, operator: String, seed: u64) -> Self {
        Self {
            provenance: Provenance { experiment: experiment.into(), theorem: theorem.into(), cone, operator, seed },
            report: Value::Object(Default::default()),
            traces: Vec::new(),
            assertions: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    /// Attach a serializable section to the JSON report.
    pub fn section<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or_else(|e| Value::String(format!("unserializable: {e}")));
        if let Value::Object(map) = &mut self.report {
            map.insert(key.into(), v);
        }
    }

    /// Record a computation that errored as a failed assertion.
    pub fn record_error(&mut self, step: &str, err: impl std::fmt::Display) {
        self.assertions.push(Assertion::holds(step, false, format!("error: {err}")));
    }
}

#[derive(Debug, Clone, Serialize)]
struct ReportDocument<'a> {
    experiment: &'a str,
    theorem: &'a str,
    cone: &'a str,
    operator: &'a str,
    seed: u64,
    passed: bool,
    assertions: &'a [Assertion],
    report: &'a Value,
}

/// Pass/fail per assertion for one experiment in a summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub name: String,
    pub theorem: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub entries: Vec<SummaryEntry>,
}

impl Summary {
    pub fn new(command: &str, seed: u64, entries: Vec<SummaryEntry>) -> Self {
        Self { command: command.into(), seed, passed: entries.iter().all(|e| e.passed), entries }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }

    /// Human-readable table, one row per entry.
    pub fn table(&self) -> String {
        let width = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(4).max(4);
        let mut out = String::new();
        for e in &self.entries {
            let status = if e.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status}  {:<width$}  {}\n", e.name, e.theorem));
            for a in e.assertions.iter().filter(|a| !a.passed) {
                out.push_str(&format!("      failed: {} ({})\n", a.name, a.detail));
            }
        }
        let total = self.entries.len();
        let ok = self.entries.iter().filter(|e| e.passed).count();
        out.push_str(&format!("{ok}/{total} passed\n"));
        out
    }
}

impl From<&Outcome> for SummaryEntry {
    fn from(o: &Outcome) -> Self {
        Self {
            name: o.provenance.experiment.clone(),
            theorem: o.provenance.theorem.clone(),
            passed: o.passed(),
            assertions: o.assertions.clone(),
        }
    }
}

/// Write the JSON report and CSV traces of `o` into `dir`; returns the
/// files written.
pub fn write_outcome(o: &Outcome, dir: &Path, cfg: &RunConfig) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let p = &o.provenance;
    if cfg.writes(Format::Json) {
        let doc = ReportDocument {
            experiment: &p.experiment,
            theorem: &p.theorem,
            cone: &p.cone,
            operator: &p.operator,
            seed: p.seed,
            passed: o.passed(),
            assertions: &o.assertions,
            report: &o.report,
        };
        let path = dir.join("report.json");
        fs::write(&path, serde_json::to_string_pretty(&doc).map_err(io::Error::other)? + "\n")?;
        written.push(path);
    }
    if cfg.writes(Format::Csv) {
        for t in &o.traces {
            let cols: Vec<&str> = t.columns.iter().map(String::as_str).collect();
            let path = dir.join(&t.file);
            fs::write(&path, csv_table(p, &cols, &t.rows))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn write_summary(s: &Summary, dir: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join("summary.json");
    fs::write(&path, s.to_json())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons_fail_on_nan() {
        assert!(!Assertion::below("x", f64::NAN, 1.0).passed);
        assert!(!Assertion::close("x", f64::NAN, 1.0, 1.0).passed);
        assert!(!Assertion::close_rel("x", 1.0, 0.0, 1.0).passed);
        assert!(Assertion::at_most("x", 1.0, 1.0).passed);
        assert!(!Assertion::below("x", 0.0, 0.0).passed);
    }

    #[test]
    fn summary_counts_failures() {
        let mut a = Outcome::new("a", "t", "3,3".into(), "laplace".into(), 1);
        a.check(Assertion::holds("ok", true, ""));
        let mut b = a.clone();
        b.provenance.experiment = "b".into();
        b.check(Assertion::below("bad", 2.0, 1.0));
        let s = Summary::new("all", 1, vec![(&a).into(), (&b).into()]);
        assert!(!s.passed);
        let table = s.table();
        assert!(table.contains("PASS  a") && table.contains("FAIL  b") && table.contains("1/2 passed"));
        let back: Summary = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
