//! The acceptance suite behind `conelab all`. Criteria run on pinned
//! cones, operators and sample sizes; only the seed, the tolerance scale
//! and the output settings come from the caller.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use conelab_core::radial::indicial_roots;
use conelab_core::{ConeSpec, LinkMode, OperatorSpec};
use serde_json::Value;

use crate::config::{ConfigError, OpKind, RunConfig};
use crate::experiments::{self, tol};
use crate::output::{write_outcome, write_summary, Assertion, Outcome, Summary, SummaryEntry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criterion {
    pub id: u8,
    pub slug: &'static str,
    pub title: &'static str,
    pub limit: Duration,
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

/// Criteria 1 to 9; determinism (10) is a property of `run_all` itself.
pub const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, slug: "indicial", title: "indicial consistency", limit: secs(1) },
    Criterion { id: 2, slug: "trichotomy", title: "trichotomy reproduction", limit: secs(30) },
    Criterion { id: 3, slug: "hardy", title: "Hardy sharpness", limit: secs(30) },
    Criterion { id: 4, slug: "green", title: "Green's function contracts", limit: secs(30) },
    Criterion { id: 5, slug: "martin", title: "Martin uniqueness", limit: secs(60) },
    Criterion { id: 6, slug: "fatou", title: "representation and Fatou limits", limit: secs(10) },
    Criterion { id: 7, slug: "bhp", title: "boundary Harnack and continuous extension", limit: secs(60) },
    Criterion { id: 8, slug: "geometry", title: "geometry suite", limit: secs(60) },
    Criterion { id: 9, slug: "hypotheses", title: "Dirichlet hypothesis ledger", limit: secs(1) },
];

pub const DETERMINISM: Criterion = Criterion { id: 10, slug: "determinism", title: "determinism", limit: Duration::MAX };

impl Criterion {
    pub fn name(&self) -> String {
        format!("{:02}-{}", self.id, self.slug)
    }
}

/// Pinned configuration for the suite, keeping the caller's seed,
/// tolerance scale and output choices.
fn pinned(cfg: &RunConfig, op: OpKind) -> RunConfig {
    RunConfig {
        cone: Some("3,3".into()),
        a: None,
        op: Some(op),
        c_a: None,
        lambda: 0.0,
        schedule: vec![2.0, 4.0, 8.0, 16.0, 32.0],
        dirs: 3,
        n: 12,
        spacing: 5.0,
        levels: 10,
        trials: 100,
        quadruples: 100_000,
        pairs: 1000,
        hardy_samples: 100,
        ..cfg.clone()
    }
}

/// Fold several experiment outcomes into one criterion outcome, prefixing
/// assertion names and trace files with the experiment name.
fn merge(crit: &Criterion, cfg: &RunConfig, parts: Vec<Outcome>) -> Outcome {
    let first = parts.first().map(|o| o.provenance.clone());
    let (cone, operator) = first.map(|p| (p.cone, p.operator)).unwrap_or_default();
    let theorem = parts.iter().map(|o| o.provenance.theorem.as_str()).collect::<Vec<_>>().join("; ");
    let mut out = Outcome::new(&crit.name(), &theorem, cone, operator, cfg.seed);
    let single = parts.len() == 1;
    for part in parts {
        let tag = part.provenance.experiment.clone();
        for mut a in part.assertions {
            if !single {
                a.name = format!("{tag}: {}", a.name);
            }
            out.assertions.push(a);
        }
        for mut t in part.traces {
            if !single {
                t.file = format!("{tag}-{}", t.file);
            }
            out.traces.push(t);
        }
        if let Value::Object(map) = &mut out.report {
            map.insert(tag, part.report);
        }
    }
    out
}

fn simons_checks(out: &mut Outcome, cfg: &RunConfig, id: u8) {
    let c = ConeSpec::simons();
    match id {
        1 => {
            let op = OperatorSpec::jacobi();
            let r0 = indicial_roots(&c, &op, &LinkMode::zero());
            let r10 = indicial_roots(&c, &op, &LinkMode::new(&c, 1, 0));
            out.check(Assertion::close("Simons/Jacobi mode-0 gamma+ = -2", r0.gamma_plus, -2.0, cfg.tol(tol::ROOT)));
            out.check(Assertion::close("Simons/Jacobi mode-0 gamma- = -3", r0.gamma_minus, -3.0, cfg.tol(tol::ROOT)));
            out.check(Assertion::close("Simons/Jacobi mode-(1,0) gamma+ = 0", r10.gamma_plus, 0.0, cfg.tol(tol::ROOT)));
        }
        2 => {
            let ls = OperatorSpec::jacobi().lambda_star(&c);
            out.check(Assertion::close("lambda* = 1/24", ls, 1.0 / 24.0, cfg.tol(tol::ROOT)));
            let drop = out.report.pointer("/criticality/supercritical/witness/T").and_then(Value::as_f64).unwrap_or(f64::NAN);
            out.check(Assertion::close("lambda = 1/12 witness annulus T = 2 pi", drop, 2.0 * PI, cfg.tol(tol::WITNESS_T)));
            let q = out.report.pointer("/criticality/supercritical/lambda_query").and_then(Value::as_f64).unwrap_or(f64::NAN);
            out.check(Assertion::close("supercritical query is 1/12", q, 1.0 / 12.0, 1e-15));
        }
        5 => {
            let slope = |end: &str| out.report.pointer(&format!("/martin/{end}/slope")).and_then(Value::as_f64).unwrap_or(f64::NAN);
            let (tip, inf) = (slope("tip"), slope("infinity"));
            out.check(Assertion::close("tip slope -5", tip, -5.0, cfg.tol(tol::MARTIN_SLOPE)));
            out.check(Assertion::close("far slope 0", inf, 0.0, cfg.tol(tol::MARTIN_SLOPE)));
        }
        _ => {}
    }
}

/// Run one criterion (1 to 9).
pub fn run_criterion(crit: &Criterion, cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    use experiments as e;
    let jac = pinned(cfg, OpKind::Jacobi);
    let lap = pinned(cfg, OpKind::Laplace);
    let parts = match crit.id {
        1 => vec![e::spectrum(&jac)?],
        2 => vec![e::criticality(&jac)?],
        3 => vec![e::hardy(&jac)?],
        4 => vec![e::green(&lap)?],
        5 => vec![e::martin(&lap)?],
        6 => vec![e::fatou(&lap)?],
        7 => vec![e::bhp(&lap)?],
        8 => vec![e::uniformity(&lap)?, e::chains(&lap)?, e::hyperbolicity(&lap)?],
        9 => vec![e::hypotheses(&lap)?],
        other => return Err(ConfigError::Field { field: "criterion", message: format!("no criterion {other}") }),
    };
    let mut out = merge(crit, cfg, parts);
    simons_checks(&mut out, cfg, crit.id);
    Ok(out)
}

/// Result of one criterion with its wall time. The time is printed, never
/// written to disk, so the files stay reproducible.
#[derive(Debug, Clone)]
pub struct CriterionRun {
    pub criterion: Criterion,
    pub outcome: Outcome,
    pub elapsed: Duration,
}

impl CriterionRun {
    pub fn within_limit(&self) -> bool {
        self.elapsed <= self.criterion.limit
    }
}

pub struct SuiteRun {
    pub runs: Vec<CriterionRun>,
    pub summary: Summary,
    pub dir: PathBuf,
}

pub fn acceptance_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("acceptance")
}

/// Criteria 1 to 9, each on its own thread, collected in index order.
pub fn run_all(cfg: &RunConfig) -> Result<SuiteRun, ConfigError> {
    let results: Vec<Result<CriterionRun, ConfigError>> = std::thread::scope(|s| {
        let handles: Vec<_> = CRITERIA
            .iter()
            .map(|crit| {
                s.spawn(move || {
                    let start = Instant::now();
                    let outcome = run_criterion(crit, cfg)?;
                    Ok(CriterionRun { criterion: *crit, outcome, elapsed: start.elapsed() })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread panicked")).collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summary = Summary::new("all", cfg.seed, runs.iter().map(|r| SummaryEntry::from(&r.outcome)).collect());
    Ok(SuiteRun { runs, summary, dir: acceptance_dir(cfg) })
}

/// Write every criterion report and the summary under `dir`.
pub fn write_suite(run: &SuiteRun, cfg: &RunConfig, dir: &Path) -> std::io::Result<()> {
    for r in &run.runs {
        write_outcome(&r.outcome, &dir.join(r.criterion.name()), cfg)?;
    }
    write_summary(&run.summary, dir)?;
    Ok(())
}

/// One line per criterion for terminals.
pub fn status_line(id: u8, title: &str, passed: bool, elapsed: Option<Duration>, limit: Option<Duration>) -> String {
    let status = if passed { "PASS" } else { "FAIL" };
    let timing = match (elapsed, limit) {
        (Some(e), Some(l)) if l != Duration::MAX => format!("  ({:.2}s, limit {}s)", e.as_secs_f64(), l.as_secs()),
        (Some(e), _) => format!("  ({:.2}s)", e.as_secs_f64()),
        _ => String::new(),
    };
    format!("criterion {id:>2} {status}  {title}{timing}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_criteria_pass_with_default_tolerances() {
        let cfg = RunConfig::default();
        for id in [1, 9] {
            let crit = CRITERIA[id - 1];
            let out = run_criterion(&crit, &cfg).unwrap();
            assert!(out.passed(), "{:#?}", out.assertions);
        }
    }

    #[test]
    fn zero_tolerance_scale_fails_loudly() {
        let cfg = RunConfig { tolerance_scale: 0.0, ..RunConfig::default() };
        let out = run_criterion(&CRITERIA[0], &cfg).unwrap();
        assert!(!out.passed());
        assert!(out.assertions.iter().any(|a| !a.passed && a.name.contains("gamma")));
    }
}
