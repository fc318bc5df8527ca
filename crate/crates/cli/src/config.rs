//! Run configuration: flat JSON keys mirroring the command-line flags.
//!
//! Precedence is defaults, then the config file, then `CONELAB_OUT_DIR`
//! (output directory only), then explicit flags.

use std::path::{Path, PathBuf};

use conelab_core::geometry::make_cone;
use conelab_core::{ConeSpec, OperatorSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OUT_DIR_ENV: &str = "CONELAB_OUT_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config {path}, line {line}, column {column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("missing required `{0}`")]
    Missing(&'static str),
}

/// Partially specified settings, as read from a file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub cone: Option<String>,
    /// Overrides `a = sqrt(p+q)`.
    pub a: Option<f64>,
    pub op: Option<String>,
    pub c_a: Option<f64>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    #[serde(rename = "T")]
    pub schedule: Option<Vec<f64>>,
    pub dirs: Option<usize>,
    pub n: Option<u32>,
    /// Chain spacing in units of `a`.
    pub spacing: Option<f64>,
    pub levels: Option<usize>,
    pub trials: Option<usize>,
    pub quadruples: Option<usize>,
    pub pairs: Option<usize>,
    pub hardy_samples: Option<usize>,
    pub tolerance_scale: Option<f64>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub json: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Laplace,
    Jacobi,
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// `"p,q"`; `info` refuses to guess it.
    pub cone: Option<String>,
    pub a: Option<f64>,
    /// `None` lets each experiment pick its natural operator.
    pub op: Option<OpKind>,
    pub c_a: Option<f64>,
    pub lambda: f64,
    pub seed: u64,
    #[serde(rename = "T")]
    pub schedule: Vec<f64>,
    pub dirs: usize,
    pub n: u32,
    pub spacing: f64,
    pub levels: usize,
    pub trials: usize,
    pub quadruples: usize,
    pub pairs: usize,
    pub hardy_samples: usize,
    /// Multiplies every pinned tolerance. Zero is accepted and makes the
    /// non-exact checks fail, which is how error reporting is exercised.
    pub tolerance_scale: f64,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub json: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cone: None,
            a: None,
            op: None,
            c_a: None,
            lambda: 0.0,
            seed: 7,
            schedule: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            dirs: 3,
            n: 12,
            spacing: 5.0,
            levels: 10,
            trials: 100,
            quadruples: 100_000,
            pairs: 1000,
            hardy_samples: 100,
            tolerance_scale: 1.0,
            out: PathBuf::from("conelab-out"),
            formats: vec![Format::Json, Format::Csv],
            json: false,
        }
    }
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

pub fn parse_cone(text: &str) -> Result<(u32, u32), ConfigError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [p, q] => {
            let p = p.parse::<u32>().map_err(|e| field("cone", format!("{text:?}: {e}")))?;
            let q = q.parse::<u32>().map_err(|e| field("cone", format!("{text:?}: {e}")))?;
            Ok((p, q))
        }
        _ => Err(field("cone", format!("expected \"p,q\", got {text:?}"))),
    }
}

pub fn parse_op(text: &str) -> Result<OpKind, ConfigError> {
    match text.trim().to_ascii_lowercase().as_str() {
        "laplace" | "laplacian" => Ok(OpKind::Laplace),
        "jacobi" => Ok(OpKind::Jacobi),
        other => Err(field("op", format!("unknown operator {other:?}; use laplace or jacobi"))),
    }
}

impl Overrides {
    pub fn from_json(text: &str, path: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        Self::from_json(&text, &shown)
    }

    /// Values set here win over values in `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            cone: self.cone.or(base.cone),
            a: self.a.or(base.a),
            op: self.op.or(base.op),
            c_a: self.c_a.or(base.c_a),
            lambda: self.lambda.or(base.lambda),
            seed: self.seed.or(base.seed),
            schedule: self.schedule.or(base.schedule),
            dirs: self.dirs.or(base.dirs),
            n: self.n.or(base.n),
            spacing: self.spacing.or(base.spacing),
            levels: self.levels.or(base.levels),
            trials: self.trials.or(base.trials),
            quadruples: self.quadruples.or(base.quadruples),
            pairs: self.pairs.or(base.pairs),
            hardy_samples: self.hardy_samples.or(base.hardy_samples),
            tolerance_scale: self.tolerance_scale.or(base.tolerance_scale),
            out: self.out.or(base.out),
            formats: self.formats.or(base.formats),
            json: self.json.or(base.json),
        }
    }
}

impl RunConfig {
    /// Merge file, environment and flags over the defaults and validate.
    pub fn resolve(file: Option<Overrides>, env_out: Option<PathBuf>, flags: Overrides) -> Result<Self, ConfigError> {
        let env = Overrides { out: env_out, ..Overrides::default() };
        let merged = flags.over(env.over(file.unwrap_or_default()));
        let d = RunConfig::default();
        let cfg = RunConfig {
            cone: merged.cone,
            a: merged.a,
            op: merged.op.as_deref().map(parse_op).transpose()?,
            c_a: merged.c_a,
            lambda: merged.lambda.unwrap_or(d.lambda),
            seed: merged.seed.unwrap_or(d.seed),
            schedule: merged.schedule.unwrap_or(d.schedule),
            dirs: merged.dirs.unwrap_or(d.dirs),
            n: merged.n.unwrap_or(d.n),
            spacing: merged.spacing.unwrap_or(d.spacing),
            levels: merged.levels.unwrap_or(d.levels),
            trials: merged.trials.unwrap_or(d.trials),
            quadruples: merged.quadruples.unwrap_or(d.quadruples),
            pairs: merged.pairs.unwrap_or(d.pairs),
            hardy_samples: merged.hardy_samples.unwrap_or(d.hardy_samples),
            tolerance_scale: merged.tolerance_scale.unwrap_or(d.tolerance_scale),
            out: merged.out.unwrap_or(d.out),
            formats: merged.formats.unwrap_or(d.formats),
            json: merged.json.unwrap_or(d.json),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(text) = &self.cone {
            let (p, q) = parse_cone(text)?;
            make_cone(p, q, self.a).map_err(|e| field("cone", e.to_string()))?;
        }
        if let Some(a) = self.a {
            if !(a > 0.0 && a.is_finite()) {
                return Err(field("a", format!("{a} is not a positive number")));
            }
        }
        for (name, v) in [("c_a", self.c_a.unwrap_or(0.0)), ("lambda", self.lambda)] {
            if !v.is_finite() {
                return Err(field(name, format!("{v} is not finite")));
            }
        }
        if self.schedule.len() < 2 || self.schedule.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(field("T", "need at least two positive window lengths"));
        }
        if self.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("T", "window lengths must increase strictly"));
        }
        if self.dirs < 2 {
            return Err(field("dirs", "need at least two directions to compare"));
        }
        if !(2..=30).contains(&self.n) {
            return Err(field("n", format!("{} outside 2..=30", self.n)));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(field("spacing", "must be positive"));
        }
        if self.levels < 3 {
            return Err(field("levels", "chains need at least three levels"));
        }
        if self.trials == 0 || self.pairs == 0 || self.hardy_samples == 0 {
            return Err(field("trials", "sample counts must be positive"));
        }
        if self.quadruples < 1000 {
            return Err(field("quadruples", "need at least 1000 quadruples"));
        }
        if !(self.tolerance_scale >= 0.0 && self.tolerance_scale.is_finite()) {
            return Err(field("tolerance_scale", format!("{} is not a nonnegative number", self.tolerance_scale)));
        }
        if self.formats.is_empty() {
            return Err(field("formats", "choose at least one of json, csv"));
        }
        Ok(())
    }

    pub fn cone_spec(&self) -> Result<ConeSpec, ConfigError> {
        let text = self.cone.as_deref().ok_or(ConfigError::Missing("cone"))?;
        let (p, q) = parse_cone(text)?;
        make_cone(p, q, self.a).map_err(|e| field("cone", e.to_string()))
    }

    /// The cone, falling back to the Simons cone.
    pub fn cone_or_simons(&self) -> Result<ConeSpec, ConfigError> {
        match self.cone {
            Some(_) => self.cone_spec(),
            None => Ok(ConeSpec::simons()),
        }
    }

    /// Operator from `op`/`c_a`, with `fallback` when neither is given.
    pub fn operator(&self, fallback: OpKind) -> Result<OperatorSpec, ConfigError> {
        let base = match self.op.unwrap_or(fallback) {
            OpKind::Laplace => 0.0,
            OpKind::Jacobi => 1.0,
        };
        OperatorSpec::new(self.c_a.unwrap_or(base), self.lambda).map_err(|e| field("op", e.to_string()))
    }

    pub fn writes(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Scaled tolerance.
    pub fn tol(&self, pinned: f64) -> f64 {
        pinned * self.tolerance_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let mut cfg = RunConfig { cone: Some("2,4".into()), op: Some(OpKind::Jacobi), lambda: 1.0 / 48.0, ..RunConfig::default() };
        cfg.schedule = vec![2.0, 4.0, 8.0];
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn flags_override_file_and_env() {
        let file = Overrides::from_json(r#"{"cone": "3,3", "seed": 3, "out": "from-file"}"#, "cfg.json").unwrap();
        let flags = Overrides { seed: Some(11), ..Overrides::default() };
        let cfg = RunConfig::resolve(Some(file.clone()), Some("from-env".into()), flags).unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.out, PathBuf::from("from-env"));
        let flags = Overrides { out: Some("from-flag".into()), ..Overrides::default() };
        assert_eq!(RunConfig::resolve(Some(file), Some("from-env".into()), flags).unwrap().out, PathBuf::from("from-flag"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = Overrides::from_json("{\n  \"cone\": \"3,3\",\n  \"bogus\": 1\n}", "cfg.json").unwrap_err();
        match err {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |o: Overrides| RunConfig::resolve(None, None, o).is_err();
        assert!(bad(Overrides { cone: Some("1,5".into()), ..Default::default() }));
        assert!(bad(Overrides { cone: Some("3".into()), ..Default::default() }));
        assert!(bad(Overrides { op: Some("wave".into()), ..Default::default() }));
        assert!(bad(Overrides { schedule: Some(vec![4.0, 2.0]), ..Default::default() }));
        assert!(bad(Overrides { tolerance_scale: Some(-1.0), ..Default::default() }));
        assert!(!bad(Overrides { tolerance_scale: Some(0.0), ..Default::default() }));
    }

    #[test]
    fn operator_selection() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.operator(OpKind::Jacobi).unwrap(), OperatorSpec::jacobi());
        let cfg = RunConfig { op: Some(OpKind::Laplace), lambda: -1.0, ..RunConfig::default() };
        assert_eq!(cfg.operator(OpKind::Jacobi).unwrap(), OperatorSpec::laplace().with_lambda(-1.0));
        assert!(RunConfig::default().cone_spec().is_err());
    }
}
