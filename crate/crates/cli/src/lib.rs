//! Experiments, reports and the acceptance suite behind the `conelab`
//! binary.

pub mod config;
pub mod experiments;
pub mod output;
pub mod suite;

use conelab_core::radial::{adaptedness_certificate, indicial_roots, AdaptednessCertificate};
use conelab_core::spectrum::enumerate_modes;
use conelab_core::{ConeSpec, IndicialRoots, OperatorSpec};
use serde::Serialize;

use config::{ConfigError, OpKind, RunConfig};

/// What `conelab info` prints.
#[derive(Debug, Clone, Serialize)]
pub struct Info {
    pub cone: ConeSpec,
    pub operator: String,
    pub lambda_star: f64,
    pub adaptedness: AdaptednessCertificate,
    pub modes: Vec<IndicialRoots>,
}

pub fn info(cfg: &RunConfig) -> Result<Info, ConfigError> {
    let c = cfg.cone_spec()?;
    let op: OperatorSpec = cfg.operator(OpKind::Laplace)?;
    let modes = enumerate_modes(&c, 400.0).iter().take(10).map(|m| indicial_roots(&c, &op, m)).collect();
    Ok(Info { cone: c, operator: op.name(), lambda_star: op.lambda_star(&c), adaptedness: adaptedness_certificate(&c, &op), modes })
}

impl Info {
    pub fn text(&self) -> String {
        let c = &self.cone;
        let mut s = format!(
            "cone C({},{}): n={} kappa={} a={} r1={} r2={} minimizing={}\n",
            c.p, c.q, c.n, c.kappa, c.a, c.r1, c.r2, c.minimizing
        );
        s.push_str(&format!("operator {}: lambda*={}\n", self.operator, self.lambda_star));
        let ad = &self.adaptedness;
        s.push_str(&format!(
            "adaptedness: k_L={} eps_L={} disc0={} supersolution r^{} adapted={} weakly_coercive={}\n",
            ad.k_l, ad.eps_l, ad.disc_mode0, ad.supersolution_exponent, ad.adapted, ad.weakly_coercive
        ));
        s.push_str("  k1  k2          mu   mult     gamma+     gamma-\n");
        for r in &self.modes {
            s.push_str(&format!(
                "{:>4}{:>4}{:>12.6}{:>7}{:>11.6}{:>11.6}\n",
                r.mode.k1, r.mode.k2, r.mode.mu, r.mode.mult, r.gamma_plus, r.gamma_minus
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn info_examples() {
        let cfg = RunConfig { cone: Some("3,3".into()), op: Some(OpKind::Jacobi), ..RunConfig::default() };
        let i = info(&cfg).unwrap();
        assert_eq!(i.cone.kappa, 6.0);
        assert!((i.lambda_star - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(i.modes.len(), 10);
        let cfg = RunConfig { cone: Some("2,4".into()), op: Some(OpKind::Laplace), ..RunConfig::default() };
        assert!((info(&cfg).unwrap().lambda_star - 25.0 / 24.0).abs() < 1e-15);
        assert!(matches!(info(&RunConfig::default()), Err(ConfigError::Missing("cone"))));
    }
}
