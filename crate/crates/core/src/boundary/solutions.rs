use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chains::PhiChain;
use super::BoundaryPoint;
use crate::geometry::{ConePoint, ConeSpec, LinkPoint};
use crate::radial::{adaptedness_certificate, indicial_roots, GreenEvaluator, OperatorSpec};
use crate::spectrum::{enumerate_modes, LinkMode, ZonalHarmonic};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingTerm {
    pub mode: LinkMode,
    pub coef: f64,
    /// Exponent gap to mode 0 in the depth variable; positive.
    pub delta_gamma: f64,
    pub harmonic: ZonalHarmonic,
}

/// `u = c0 rho^{-g0} (1 + sum_k (c_k/c0) rho^{dg_k} Y_k)` in the depth
/// variable `rho` of the boundary point, i.e. a combination of the
/// minimal-growth solutions there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingSolution {
    pub at: BoundaryPoint,
    pub c0: f64,
    /// Mode-0 exponent in `r`.
    pub gamma0: f64,
    pub terms: Vec<VanishingTerm>,
    /// The positivity bound is certified on `rho <= working_depth`.
    pub working_depth: f64,
    pub margin: f64,
}

impl VanishingSolution {
    /// Build from explicit coefficients; fails unless
    /// `sum |c_k| rho_w^{dg_k} < c0`.
    pub fn new(
        c: &ConeSpec,
        op: &OperatorSpec,
        at: BoundaryPoint,
        c0: f64,
        terms: &[(LinkMode, f64, LinkPoint)],
        working_depth: f64,
    ) -> Result<Self> {
        let cert = adaptedness_certificate(c, op);
        if !cert.weakly_coercive {
            return Err(Error::NotCoercive { lambda: op.lambda, lambda_star: cert.lambda_star });
        }
        if !(c0 > 0.0) {
            return Err(Error::PositivityUnverifiable { mass: f64::INFINITY });
        }
        let exponent = |m: &LinkMode| {
            let r = indicial_roots(c, op, m);
            match at {
                BoundaryPoint::Tip => r.gamma_plus,
                BoundaryPoint::Infinity => r.gamma_minus,
            }
        };
        let gamma0 = exponent(&LinkMode::zero());
        let mut out = Vec::with_capacity(terms.len());
        for (mode, coef, pole) in terms {
            let roots = indicial_roots(c, op, mode);
            if !roots.admits_green() || mode.is_constant() {
                return Err(Error::InvalidInput(format!("mode ({}, {}) cannot be admixed", mode.k1, mode.k2)));
            }
            let delta_gamma = match at {
                BoundaryPoint::Tip => exponent(mode) - gamma0,
                BoundaryPoint::Infinity => gamma0 - exponent(mode),
            };
            out.push(VanishingTerm {
                mode: *mode,
                coef: *coef,
                delta_gamma,
                harmonic: ZonalHarmonic { mode: *mode, pole: pole.clone() },
            });
        }
        let mass: f64 = out.iter().map(|t| t.coef.abs() * working_depth.powf(t.delta_gamma)).sum::<f64>() / c0;
        if mass >= 1.0 {
            return Err(Error::PositivityUnverifiable { mass });
        }
        Ok(Self { at, c0, gamma0, terms: out, working_depth, margin: 1.0 - mass })
    }

    /// Relative perturbation `eps` with `u = c0 r^{gamma0} (1 + eps)`.
    pub fn eps(&self, x: &ConePoint) -> f64 {
        let rho = self.at.depth(x.r);
        self.terms.iter().map(|t| t.coef / self.c0 * rho.powf(t.delta_gamma) * t.harmonic.eval(&x.theta)).sum()
    }

    pub fn eval(&self, x: &ConePoint) -> f64 {
        self.c0 * x.r.powf(self.gamma0) * (1.0 + self.eps(x))
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.terms.iter().filter(|t| t.coef != 0.0).map(|t| t.delta_gamma).reduce(f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of admixed nonconstant modes (lowest in the table).
    pub k_modes: usize,
    /// Upper bound for the certified perturbation mass.
    pub max_mass: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { k_modes: 3, max_mass: 0.5 }
    }
}

/// Random positive solution vanishing at `at` relative to the midpoint
/// supersolution, certified positive on `rho <= working_depth`.
pub fn sample_vanishing_solution<R: Rng + ?Sized>(
    c: &ConeSpec,
    op: &OperatorSpec,
    at: BoundaryPoint,
    working_depth: f64,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<VanishingSolution> {
    let modes: Vec<LinkMode> = enumerate_modes(c, 400.0).into_iter().filter(|m| !m.is_constant()).take(cfg.k_modes).collect();
    let c0 = rng.random_range(0.5..2.0);
    let raw: Vec<(LinkMode, f64, LinkPoint)> =
        modes.iter().map(|m| (*m, rng.random_range(-1.0..1.0), c.random_link_point(rng))).collect();
    let mass = rng.random_range(0.0..cfg.max_mass);
    let probe = VanishingSolution::new(c, op, at, 1.0, &[], working_depth)?;
    let weight: f64 = raw
        .iter()
        .map(|(m, coef, _)| {
            let r = indicial_roots(c, op, m);
            let g = match at {
                BoundaryPoint::Tip => r.gamma_plus - probe.gamma0,
                BoundaryPoint::Infinity => probe.gamma0 - r.gamma_minus,
            };
            coef.abs() * working_depth.powf(g)
        })
        .sum();
    let scale = if weight > 0.0 { mass * c0 / weight } else { 0.0 };
    let terms: Vec<(LinkMode, f64, LinkPoint)> = raw.into_iter().map(|(m, coef, p)| (m, coef * scale, p)).collect();
    VanishingSolution::new(c, op, at, c0, &terms, working_depth)
}

/// Extremes of `u/v` on one shell `N_k \ N_{k+1}`, stored as deviations
/// from the boundary limit so that deep levels keep full precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellStats {
    pub level: usize,
    pub limit: f64,
    pub max_dev: f64,
    pub min_dev: f64,
}

impl ShellStats {
    pub fn sup(&self) -> f64 {
        self.limit * (1.0 + self.max_dev)
    }

    pub fn inf(&self) -> f64 {
        self.limit * (1.0 + self.min_dev)
    }

    pub fn osc(&self) -> f64 {
        self.limit * (self.max_dev - self.min_dev)
    }
}

/// Link directions shared by every shell: seeded points plus the poles of
/// all admixed harmonics and their antipodes.
fn link_samples<R: Rng + ?Sized>(c: &ConeSpec, sols: &[&VanishingSolution], count: usize, rng: &mut R) -> Vec<LinkPoint> {
    let mut out: Vec<LinkPoint> = (0..count).map(|_| c.random_link_point(rng)).collect();
    for s in sols {
        for t in &s.terms {
            out.push(t.harmonic.pole.clone());
            out.push(t.harmonic.pole.antipode());
        }
    }
    out
}

fn shell_stats(chain: &PhiChain, u: &VanishingSolution, v: &VanishingSolution, thetas: &[LinkPoint], radial: usize) -> Result<Vec<ShellStats>> {
    if u.at != chain.boundary || v.at != chain.boundary || u.gamma0 != v.gamma0 {
        return Err(Error::InvalidInput("solutions do not vanish at the chain's boundary point".into()));
    }
    let limit = u.c0 / v.c0;
    let mut out = Vec::with_capacity(chain.levels.len() - 1);
    for k in 0..chain.levels.len() - 1 {
        let (top, bottom) = (chain.depth_log(k), chain.depth_log(k + 1));
        let (mut max_dev, mut min_dev) = (f64::NEG_INFINITY, f64::INFINITY);
        for j in 0..radial {
            let tau = top + (bottom - top) * j as f64 / (radial - 1) as f64;
            let r = chain.boundary.radius_from_depth(tau.exp());
            for th in thetas {
                let x = ConePoint { r, theta: th.clone() };
                let (eu, ev) = (u.eps(&x), v.eps(&x));
                if 1.0 + ev < v.margin * 0.5 {
                    return Err(Error::DivisionUnstable { level: k, value: 1.0 + ev });
                }
                let dev = (eu - ev) / (1.0 + ev);
                max_dev = max_dev.max(dev);
                min_dev = min_dev.min(dev);
            }
        }
        out.push(ShellStats { level: k, limit, max_dev, min_dev });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhpReport {
    pub trials: usize,
    pub c_hat: f64,
    /// Max over trials of `sup_{N_i} (u/v) / inf_{N_i} (u/v)`.
    pub per_level: Vec<f64>,
    pub first_half_max: f64,
    pub deep_half_max: f64,
}

/// `sup/inf` of `u/v` over `N_i`, assembled from shell extremes.
pub fn level_ratios(shells: &[ShellStats]) -> Vec<f64> {
    (0..shells.len())
        .map(|i| {
            let max = shells[i..].iter().map(|s| s.max_dev).fold(f64::NEG_INFINITY, f64::max);
            let min = shells[i..].iter().map(|s| s.min_dev).fold(f64::INFINITY, f64::min);
            (1.0 + max) / (1.0 + min)
        })
        .collect()
}

/// Boundary Harnack constant over random pairs of vanishing solutions.
pub fn bhp_verify<R: Rng + ?Sized>(
    c: &ConeSpec,
    op: &OperatorSpec,
    chain: &PhiChain,
    trials: usize,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<BhpReport> {
    let working = chain.depth_log(0).exp();
    let mut per_level = vec![1.0f64; chain.levels.len() - 1];
    for _ in 0..trials {
        let u = sample_vanishing_solution(c, op, chain.boundary, working, cfg, rng)?;
        let v = sample_vanishing_solution(c, op, chain.boundary, working, cfg, rng)?;
        let thetas = link_samples(c, &[&u, &v], 16, rng);
        let shells = shell_stats(chain, &u, &v, &thetas, 9)?;
        for (slot, q) in per_level.iter_mut().zip(level_ratios(&shells)) {
            *slot = slot.max(q);
        }
    }
    let half = per_level.len() / 2;
    let first_half_max = per_level[..half.max(1)].iter().copied().fold(1.0, f64::max);
    let deep_half_max = per_level[half..].iter().copied().fold(1.0, f64::max);
    Ok(BhpReport {
        trials,
        c_hat: per_level.iter().copied().fold(1.0, f64::max),
        per_level,
        first_half_max,
        deep_half_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationTrace {
    pub shells: Vec<ShellStats>,
    pub osc: Vec<f64>,
    /// Geometric ratio from a least-squares fit of `log osc(k)`, levels >= 1.
    pub fitted_ratio: f64,
    /// `exp(-dt * min gap)` from the slowest admixed mode.
    pub predicted_ratio: f64,
    pub monotone_after_first: bool,
    /// `u/v` at the deepest sampled point against `c0_u / c0_v`.
    pub limit_estimate: f64,
    pub limit_expected: f64,
}

pub fn oscillation_decay<R: Rng + ?Sized>(
    c: &ConeSpec,
    chain: &PhiChain,
    u: &VanishingSolution,
    v: &VanishingSolution,
    rng: &mut R,
) -> Result<OscillationTrace> {
    let thetas = link_samples(c, &[u, v], 16, rng);
    let shells = shell_stats(chain, u, v, &thetas, 9)?;
    let osc: Vec<f64> = shells.iter().map(ShellStats::osc).collect();
    let pts: Vec<(f64, f64)> =
        osc.iter().enumerate().skip(1).filter(|(_, o)| **o > 0.0).map(|(k, o)| (k as f64, o.ln())).collect();
    let fitted_ratio = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx).exp()
    } else {
        0.0
    };
    let dt = chain.spacing / c.a;
    let gap = match (u.min_gap(), v.min_gap()) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => f64::INFINITY,
    };
    let deepest = shells.last().map(|s| s.limit * (1.0 + 0.5 * (s.max_dev + s.min_dev))).unwrap_or(f64::NAN);
    Ok(OscillationTrace {
        monotone_after_first: osc.windows(2).skip(1).all(|w| w[1] <= w[0]),
        osc,
        shells,
        fitted_ratio,
        predicted_ratio: (-dt * gap).exp(),
        limit_estimate: deepest,
        limit_expected: u.c0 / v.c0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// `(r0, min over grid points with r <= r0 of G(., p) / u)`.
    pub minima: Vec<(f64, f64)>,
}

/// `G(., p) >= c u` near the tip: minima of `G/u` over shrinking balls.
pub fn green_domination(
    ge: &GreenEvaluator,
    u: &VanishingSolution,
    p: &ConePoint,
    radii: &[f64],
    thetas: &[LinkPoint],
    r0s: &[f64],
) -> Result<DominationReport> {
    let mut values = Vec::with_capacity(radii.len() * thetas.len());
    for &r in radii {
        for th in thetas {
            let x = ConePoint { r, theta: th.clone() };
            values.push((r, ge.green(&x, p)?.value / u.eval(&x)));
        }
    }
    let minima = r0s
        .iter()
        .map(|&r0| (r0, values.iter().filter(|v| v.0 <= r0).map(|v| v.1).fold(f64::INFINITY, f64::min)))
        .collect();
    Ok(DominationReport { minima })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{build_phi_chain, UnfoldedPoint};
    use crate::geometry::make_cone;
    use crate::radial::GreenConfig;
    use crate::seeded_rng;
    use proptest::prelude::*;

    fn chain(c: &ConeSpec, m: usize) -> PhiChain {
        let anchor = UnfoldedPoint { t: 0.0, theta: c.north() };
        build_phi_chain(c, BoundaryPoint::Tip, m, 5.0 * c.a, &anchor, 16, 0.05, &mut seeded_rng(0)).unwrap()
    }

    #[test]
    fn sampler_examples() {
        let c = ConeSpec::simons();
        let op = OperatorSpec::laplace();
        let plain = VanishingSolution::new(&c, &op, BoundaryPoint::Tip, 1.0, &[], 1.0).unwrap();
        assert_eq!(plain.margin, 1.0);
        assert_eq!(plain.gamma0, 0.0);
        let m10 = LinkMode::new(&c, 1, 0);
        let one = VanishingSolution::new(&c, &op, BoundaryPoint::Tip, 1.0, &[(m10, 0.5, c.north())], 1.0).unwrap();
        assert!((one.terms[0].delta_gamma - 1.0).abs() < 1e-12);
        assert!((one.margin - 0.5).abs() < 1e-12);
        let bad = VanishingSolution::new(&c, &op, BoundaryPoint::Tip, 1.0, &[(m10, 1.5, c.north())], 1.0);
        assert!(matches!(bad, Err(Error::PositivityUnverifiable { .. })));
        // u / w -> 0 against the supersolution r^{-5/2}
        let slope = one.gamma0 + c.half_dim();
        assert!(slope > 0.0);
        let ratio = |r: f64| one.eval(&ConePoint { r, theta: c.north() }) / r.powf(-c.half_dim());
        assert!(ratio(1e-4) < ratio(1e-2) && ratio(1e-6) < 1e-14);
    }

    #[test]
    fn equal_solutions_give_unit_ratios() {
        let c = ConeSpec::simons();
        let op = OperatorSpec::laplace();
        let ch = chain(&c, 8);
        let u = sample_vanishing_solution(&c, &op, BoundaryPoint::Tip, 1.0, &SamplerConfig::default(), &mut seeded_rng(5)).unwrap();
        let tr = oscillation_decay(&c, &ch, &u, &u, &mut seeded_rng(6)).unwrap();
        assert!(tr.osc.iter().all(|o| *o == 0.0));
        let shells = shell_stats(&ch, &u, &u, &[c.north()], 5).unwrap();
        assert!(level_ratios(&shells).iter().all(|q| *q == 1.0));
    }

    #[test]
    fn single_mode_admixture_example() {
        let c = ConeSpec::simons();
        let op = OperatorSpec::laplace();
        let ch = chain(&c, 10);
        let u = VanishingSolution::new(&c, &op, BoundaryPoint::Tip, 1.0, &[], 1.0).unwrap();
        let m10 = LinkMode::new(&c, 1, 0);
        let v = VanishingSolution::new(&c, &op, BoundaryPoint::Tip, 1.0, &[(m10, 0.5, c.north())], 1.0).unwrap();
        let thetas = link_samples(&c, &[&u, &v], 8, &mut seeded_rng(1));
        let q = level_ratios(&shell_stats(&ch, &u, &v, &thetas, 9).unwrap());
        assert!(q.windows(2).all(|w| w[1] <= w[0]));
        assert!(q[0] <= 3.0 && (q.last().unwrap() - 1.0).abs() < 1e-12);
        let tr = oscillation_decay(&c, &ch, &u, &v, &mut seeded_rng(2)).unwrap();
        assert!((tr.fitted_ratio / tr.predicted_ratio - 1.0).abs() < 0.1, "{} vs {}", tr.fitted_ratio, tr.predicted_ratio);
        assert!((tr.limit_estimate - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infinity_solutions_decay_toward_infinity() {
        let c = ConeSpec::simons();
        let op = OperatorSpec::laplace();
        let u = sample_vanishing_solution(&c, &op, BoundaryPoint::Infinity, 1.0, &SamplerConfig::default(), &mut seeded_rng(8)).unwrap();
        assert_eq!(u.gamma0, -5.0);
        assert!(u.terms.iter().all(|t| t.delta_gamma > 0.0));
        assert!(u.eval(&ConePoint { r: 10.0, theta: c.north() }) > 0.0);
    }

    #[test]
    fn green_dominates_vanishing_solutions() {
        let c = ConeSpec::simons();
        let op = OperatorSpec::laplace();
        let ge = GreenEvaluator::new(c, op, GreenConfig::default()).unwrap();
        let p = ConePoint { r: 1.0, theta: c.north() };
        let mut rng = seeded_rng(9);
        let thetas: Vec<LinkPoint> = (0..6).map(|_| c.random_link_point(&mut rng)).collect();
        let radii: Vec<f64> = (0..12).map(|i| 0.5 * 0.5f64.powi(i)).collect();
        for _ in 0..5 {
            let u = sample_vanishing_solution(&c, &op, BoundaryPoint::Tip, 0.5, &SamplerConfig::default(), &mut rng).unwrap();
            let rep = green_domination(&ge, &u, &p, &radii, &thetas, &[0.5, 0.25, 0.125, 0.0625]).unwrap();
            assert!(rep.minima.iter().all(|m| m.1 > 0.0));
            assert!(rep.minima.windows(2).all(|w| w[1].1 >= w[0].1));
        }
    }

    #[test]
    fn bhp_is_level_stable_on_two_cones() {
        let op = OperatorSpec::laplace();
        let mut hats = Vec::new();
        for (p, q) in [(3, 3), (2, 4)] {
            let c = make_cone(p, q, None).unwrap();
            let ch = chain(&c, 10);
            let rep = bhp_verify(&c, &op, &ch, 100, &SamplerConfig::default(), &mut seeded_rng(11)).unwrap();
            assert!(rep.c_hat.is_finite() && rep.c_hat >= 1.0);
            assert!(rep.deep_half_max <= rep.first_half_max + 1e-6);
            hats.push(rep.c_hat);
        }
        assert!(hats[0] / hats[1] < 2.0 && hats[1] / hats[0] < 2.0, "{hats:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn level_ratios_swap_and_scale_invariant(seed in 0u64..10_000, scale in 0.1f64..10.0) {
            let c = ConeSpec::simons();
            let op = OperatorSpec::laplace();
            let ch = chain(&c, 6);
            let mut rng = seeded_rng(seed);
            let cfg = SamplerConfig::default();
            let u = sample_vanishing_solution(&c, &op, BoundaryPoint::Tip, 1.0, &cfg, &mut rng).unwrap();
            let v = sample_vanishing_solution(&c, &op, BoundaryPoint::Tip, 1.0, &cfg, &mut rng).unwrap();
            let thetas = link_samples(&c, &[&u, &v], 8, &mut rng);
            let q_uv = level_ratios(&shell_stats(&ch, &u, &v, &thetas, 5).unwrap());
            let q_vu = level_ratios(&shell_stats(&ch, &v, &u, &thetas, 5).unwrap());
            let mut us = u.clone();
            us.c0 *= scale;
            us.terms.iter_mut().for_each(|t| t.coef *= scale);
            let q_su = level_ratios(&shell_stats(&ch, &us, &v, &thetas, 5).unwrap());
            for i in 0..q_uv.len() {
                prop_assert!((q_uv[i] - q_vu[i]).abs() < 1e-12 * q_uv[i]);
                prop_assert!((q_uv[i] - q_su[i]).abs() < 1e-12 * q_uv[i]);
            }
        }
    }
}
