use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BoundaryPoint;
use crate::geometry::{link_distance, pencil_membership, ConePoint, ConeSpec, LinkPoint, Pencil, PencilApex};
use crate::radial::{indicial_roots, GreenEvaluator, OperatorSpec};
use crate::spectrum::LinkMode;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartinConfig {
    pub boundary: BoundaryPoint,
    pub directions: usize,
    pub n_max: u32,
    /// Test radii; keep them well separated from both `p` and the poles.
    pub test_radii: Vec<f64>,
    pub test_directions: usize,
    pub seed: u64,
}

impl MartinConfig {
    pub fn tip() -> Self {
        Self {
            boundary: BoundaryPoint::Tip,
            directions: 3,
            n_max: 12,
            test_radii: vec![4.0, 5.657, 8.0, 11.31, 16.0, 22.63, 32.0],
            test_directions: 4,
            seed: 7,
        }
    }

    pub fn infinity() -> Self {
        Self {
            boundary: BoundaryPoint::Infinity,
            test_radii: MartinConfig::tip().test_radii.iter().map(|r| 1.0 / r).collect(),
            ..MartinConfig::tip()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartinEstimate {
    pub base: ConePoint,
    /// `sup_x |K_{n} - K_{n-1}| / K_n` per direction, `n = 2..=n_max`.
    pub consecutive: Vec<Vec<f64>>,
    /// `sup_x |K^i - K^j|` over direction pairs at `n_max`.
    pub direction_spread: f64,
    /// Same, relative to the kernel value. Decays like `r_n` at the tip
    /// (like `1/r_n` at infinity) through the first nonconstant mode at `p`.
    pub direction_spread_rel: f64,
    /// `|K(p, p_n) - 1|`, maximized over `n` and directions.
    pub normalization_error: f64,
    /// Least-squares slope of `log K` against `log r` at `n_max`.
    pub slope: f64,
    /// `(r, K)` along the base direction at `n_max`.
    pub limit_profile: Vec<(f64, f64)>,
}

/// `K(x, p_n) = G(x, p_n) / G(p, p_n)` along several pole sequences.
pub fn martin_kernel(ge: &GreenEvaluator, cfg: &MartinConfig) -> Result<MartinEstimate> {
    let c = &ge.cone;
    let mut rng = crate::seeded_rng(cfg.seed);
    let theta0 = c.north();
    let base = ConePoint { r: 1.0, theta: theta0.clone() };
    let dirs: Vec<LinkPoint> = (0..cfg.directions).map(|_| c.random_link_point(&mut rng)).collect();
    let mut test_thetas = vec![theta0.clone()];
    test_thetas.extend((1..cfg.test_directions).map(|_| c.random_link_point(&mut rng)));
    let grid: Vec<ConePoint> = cfg
        .test_radii
        .iter()
        .flat_map(|&r| test_thetas.iter().map(move |th| ConePoint { r, theta: th.clone() }))
        .collect();
    let pole_radius = |n: u32| match cfg.boundary {
        BoundaryPoint::Tip => 2f64.powi(-(n as i32)),
        BoundaryPoint::Infinity => 2f64.powi(n as i32),
    };
    let mut finals: Vec<Vec<f64>> = Vec::new();
    let mut consecutive = Vec::new();
    let mut normalization_error: f64 = 0.0;
    for dir in &dirs {
        let mut prev: Option<Vec<f64>> = None;
        let mut trace = Vec::new();
        for n in 1..=cfg.n_max {
            let pn = ConePoint { r: pole_radius(n), theta: dir.clone() };
            let norm = ge.green(&base, &pn)?.value;
            normalization_error = normalization_error.max((ge.green(&base, &pn)?.value / norm - 1.0).abs());
            let k: Vec<f64> = grid.iter().map(|x| Ok(ge.green(x, &pn)?.value / norm)).collect::<Result<_>>()?;
            if let Some(p) = &prev {
                trace.push(k.iter().zip(p).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max));
            }
            prev = Some(k);
        }
        consecutive.push(trace);
        finals.push(prev.unwrap_or_default());
    }
    let (mut direction_spread, mut direction_spread_rel): (f64, f64) = (0.0, 0.0);
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            for (a, b) in finals[i].iter().zip(&finals[j]) {
                direction_spread = direction_spread.max((a - b).abs());
                direction_spread_rel = direction_spread_rel.max(((a - b) / a).abs());
            }
        }
    }
    let first = finals.first().cloned().unwrap_or_default();
    let pts: Vec<(f64, f64)> = grid.iter().zip(&first).map(|(x, k)| (x.r.ln(), k.ln())).collect();
    let slope = least_squares_slope(&pts);
    let limit_profile =
        grid.iter().zip(&first).filter(|(x, _)| x.theta == theta0).map(|(x, k)| (x.r, *k)).collect();
    Ok(MartinEstimate { base, consecutive, direction_spread, direction_spread_rel, normalization_error, slope, limit_profile })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationFit {
    pub mu_tip: f64,
    pub mu_inf: f64,
    /// Root-mean-square relative residual over the grid.
    pub residual: f64,
    pub representable: bool,
}

/// Fit `u ~ mu_tip k_tip + mu_inf k_inf` with `k_tip = r^{gamma-_0}` and
/// `k_inf = r^{gamma+_0}`, both normalized at `r = 1`.
pub fn martin_representation_fit(
    c: &ConeSpec,
    op: &OperatorSpec,
    u: &dyn Fn(&ConePoint) -> f64,
    radii: &[f64],
    thetas: &[LinkPoint],
    residual_tol: f64,
) -> Result<RepresentationFit> {
    let roots = indicial_roots(c, op, &LinkMode::zero());
    if !roots.admits_green() {
        return Err(Error::Criticality { k1: 0, k2: 0, disc: roots.disc });
    }
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut rows = Vec::new();
    for &r in radii {
        for th in thetas {
            let val = u(&ConePoint { r, theta: th.clone() });
            if !(val.is_finite() && val != 0.0) {
                return Err(Error::InvalidInput(format!("u({r}) = {val}")));
            }
            let (p, q) = (r.powf(roots.gamma_minus) / val, r.powf(roots.gamma_plus) / val);
            a11 += p * p;
            a12 += p * q;
            a22 += q * q;
            b1 += p;
            b2 += q;
            rows.push((p, q));
        }
    }
    let det = a11 * a22 - a12 * a12;
    let mu_tip = (b1 * a22 - b2 * a12) / det;
    let mu_inf = (a11 * b2 - a12 * b1) / det;
    let residual =
        (rows.iter().map(|(p, q)| (mu_tip * p + mu_inf * q - 1.0).powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
    let representable = residual < residual_tol;
    if representable {
        let tol = 1e-9 * mu_tip.abs().max(mu_inf.abs());
        for m in [mu_tip, mu_inf] {
            if m < -tol {
                return Err(Error::NegativeCoefficient(m));
            }
        }
    }
    Ok(RepresentationFit { mu_tip, mu_inf, residual, representable })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatouReport {
    pub tip_ratio: Option<f64>,
    pub tip_expected: Option<f64>,
    pub inf_ratio: Option<f64>,
    pub inf_expected: Option<f64>,
    /// Largest deviation from the expected limits over the sampled points.
    pub max_error: f64,
}

/// Ratios `u_mu / u_nu` deep inside the pencil at the tip and far out,
/// for the atomic measures `mu = (mu_tip, mu_inf)`.
pub fn fatou_atomic(
    c: &ConeSpec,
    op: &OperatorSpec,
    mu: (f64, f64),
    nu: (f64, f64),
    omega: f64,
    samples: usize,
    seed: u64,
) -> Result<FatouReport> {
    if omega >= c.s_transform().lipschitz_constant {
        return Err(Error::EmptyPencil { omega, limit: c.s_transform().lipschitz_constant });
    }
    let roots = indicial_roots(c, op, &LinkMode::zero());
    if !roots.admits_green() {
        return Err(Error::Criticality { k1: 0, k2: 0, disc: roots.disc });
    }
    let u = |m: (f64, f64), r: f64| m.0 * r.powf(roots.gamma_minus) + m.1 * r.powf(roots.gamma_plus);
    let pencil = Pencil { apex: PencilApex::Tip, omega };
    let mut rng = crate::seeded_rng(seed);
    let thetas: Vec<LinkPoint> = (0..samples.max(1)).map(|_| c.random_link_point(&mut rng)).collect();
    let mut max_error: f64 = 0.0;
    let mut check = |r: f64, expected: f64| -> Result<f64> {
        let mut last = f64::NAN;
        for th in &thetas {
            let x = ConePoint { r, theta: th.clone() };
            if !pencil_membership(c, &pencil, &x) {
                return Err(Error::EmptyPencil { omega, limit: c.s_transform().lipschitz_constant });
            }
            last = u(mu, r) / u(nu, r);
            max_error = max_error.max((last - expected).abs());
        }
        Ok(last)
    };
    // deep enough that the slower atom is suppressed by 1e-9 relative
    let depth = 10f64.powf(-(9.0 / (roots.gamma_plus - roots.gamma_minus)).max(6.0));
    let (mut tip_ratio, mut tip_expected, mut inf_ratio, mut inf_expected) = (None, None, None, None);
    if nu.0 > 0.0 {
        let e = mu.0 / nu.0;
        tip_ratio = Some(check(depth, e)?);
        tip_expected = Some(e);
    }
    if nu.1 > 0.0 {
        let e = mu.1 / nu.1;
        inf_ratio = Some(check(1.0 / depth, e)?);
        inf_expected = Some(e);
    }
    Ok(FatouReport { tip_ratio, tip_expected, inf_ratio, inf_expected, max_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilTubeReport {
    /// `(eta, zeta_hat)` per radius.
    pub per_eta: Vec<(f64, f64)>,
    pub zeta_hat: f64,
    pub bound: f64,
    pub eta_spread: f64,
}

/// Distance in the unfolded metric from pencil points near the tip to the
/// axis ray through `theta0`.
pub fn pencil_tube_check(c: &ConeSpec, omega: f64, etas: &[f64], samples: usize, seed: u64) -> Result<PencilTubeReport> {
    let limit = c.s_transform().lipschitz_constant;
    if omega >= limit {
        return Err(Error::EmptyPencil { omega, limit });
    }
    let theta0 = c.north();
    let pencil = Pencil { apex: PencilApex::Tip, omega };
    let mut per_eta = Vec::with_capacity(etas.len());
    for &eta in etas {
        // same link samples for every eta so that only the radii change
        let mut rng = crate::seeded_rng(seed);
        let mut zeta: f64 = 0.0;
        for _ in 0..samples {
            let r = eta * rng.random_range(0.0f64..1.0).max(1e-300);
            let theta = c.random_link_point(&mut rng);
            let x = ConePoint { r, theta };
            if pencil_membership(c, &pencil, &x) {
                zeta = zeta.max(c.a * link_distance(c, &x.theta, &theta0));
            }
        }
        per_eta.push((eta, zeta));
    }
    let zeta_hat = per_eta.iter().map(|p| p.1).fold(0.0, f64::max);
    let low = per_eta.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(PencilTubeReport { per_eta, zeta_hat, bound: c.a * std::f64::consts::PI, eta_spread: zeta_hat - low })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub constants_harmonic: bool,
    pub green_to_zero_at_tip: bool,
    pub green_to_zero_at_infinity: bool,
    pub solvable: bool,
    pub gamma_plus0: f64,
    pub gamma_minus0: f64,
    pub disc0: f64,
}

/// Status of the hypotheses of the Dirichlet problem at the singular ends.
pub fn dirichlet_hypotheses(c: &ConeSpec, op: &OperatorSpec) -> HypothesisReport {
    let roots = indicial_roots(c, op, &LinkMode::zero());
    let constants_harmonic = op.zeroth_order(c).abs() <= 1e-12 * c.kappa.max(1.0);
    let real = roots.disc > 0.0 && !roots.degenerate;
    let at_tip = real && roots.gamma_plus > 0.0;
    let at_inf = real && roots.gamma_minus < 0.0;
    HypothesisReport {
        constants_harmonic,
        green_to_zero_at_tip: at_tip,
        green_to_zero_at_infinity: at_inf,
        solvable: constants_harmonic && at_tip && at_inf,
        gamma_plus0: roots.gamma_plus,
        gamma_minus0: roots.gamma_minus,
        disc0: roots.disc,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_cone;
    use crate::radial::GreenConfig;

    fn laplace_evaluator() -> GreenEvaluator {
        GreenEvaluator::new(ConeSpec::simons(), OperatorSpec::laplace(), GreenConfig::default()).unwrap()
    }

    #[test]
    fn martin_tip_kernels_agree_across_directions() {
        let ge = laplace_evaluator();
        let est = martin_kernel(&ge, &MartinConfig::tip()).unwrap();
        assert!(est.direction_spread < 1e-4, "{}", est.direction_spread);
        assert!((est.slope + 5.0).abs() < 1e-3, "{}", est.slope);
        assert!(est.normalization_error == 0.0);
        for trace in &est.consecutive {
            assert!(trace.last().unwrap() < &trace[0]);
        }
        // relative agreement improves like r_n = 2^-n
        let deeper = martin_kernel(&ge, &MartinConfig { n_max: 16, ..MartinConfig::tip() }).unwrap();
        let ratio = deeper.direction_spread_rel / est.direction_spread_rel;
        assert!((ratio * 16.0 - 1.0).abs() < 0.05, "{ratio}");
        assert!(deeper.direction_spread_rel < 1e-4);
    }

    #[test]
    fn martin_infinity_kernel_is_flat() {
        let ge = laplace_evaluator();
        let est = martin_kernel(&ge, &MartinConfig::infinity()).unwrap();
        assert!(est.slope.abs() < 1e-3, "{}", est.slope);
        assert!(est.direction_spread_rel < 1e-3, "{}", est.direction_spread_rel);
    }

    fn grid(c: &ConeSpec) -> (Vec<f64>, Vec<LinkPoint>) {
        let radii = (0..21).map(|i| 10f64.powf(-1.0 + 0.1 * i as f64)).collect();
        let mut rng = crate::seeded_rng(3);
        (radii, (0..3).map(|_| c.random_link_point(&mut rng)).collect())
    }

    #[test]
    fn representation_examples() {
        let c = ConeSpec::simons();
        let op = OperatorSpec::laplace();
        let (radii, thetas) = grid(&c);
        let tip = martin_representation_fit(&c, &op, &|x| x.r.powi(-5), &radii, &thetas, 1e-8).unwrap();
        assert!((tip.mu_tip - 1.0).abs() < 1e-10 && tip.mu_inf.abs() < 1e-10 && tip.residual < 1e-10);
        let two = martin_representation_fit(&c, &op, &|x| 2.0 * x.r.powi(-5) + 3.0, &radii, &thetas, 1e-8).unwrap();
        assert!((two.mu_tip - 2.0).abs() < 1e-8 && (two.mu_inf - 3.0).abs() < 1e-8 && two.residual < 1e-8);
        let bad = martin_representation_fit(&c, &op, &|x| x.r.powi(-2), &radii, &thetas, 1e-8).unwrap();
        assert!(!bad.representable && bad.residual > 1e-3);
        let neg = martin_representation_fit(&c, &op, &|x| 2.0 * x.r.powi(-5) - 1e-3, &[0.1, 0.2, 0.3], &thetas, 1e-8);
        assert!(matches!(neg, Err(Error::NegativeCoefficient(_))));
    }

    #[test]
    fn fatou_examples() {
        let c = ConeSpec::simons();
        let op = OperatorSpec::laplace();
        let omega = 0.5 / c.a;
        let same = fatou_atomic(&c, &op, (1.0, 1.0), (1.0, 1.0), omega, 8, 1).unwrap();
        assert_eq!(same.max_error, 0.0);
        let rep = fatou_atomic(&c, &op, (1.0, 1.0), (2.0, 1.0), omega, 8, 1).unwrap();
        assert!((rep.tip_ratio.unwrap() - 0.5).abs() < 1e-5);
        assert!((rep.inf_ratio.unwrap() - 1.0).abs() < 1e-5);
        assert!(matches!(fatou_atomic(&c, &op, (1.0, 1.0), (2.0, 1.0), 1.0, 8, 1), Err(Error::EmptyPencil { .. })));
    }

    #[test]
    fn pencil_tube_examples() {
        let c = ConeSpec::simons();
        let rep = pencil_tube_check(&c, 0.5 / c.a, &[0.1, 0.05, 0.025], 2000, 4).unwrap();
        assert!(rep.zeta_hat <= 6f64.sqrt() * std::f64::consts::PI + 1e-6);
        assert!(rep.eta_spread <= 1e-9);
        assert!(rep.zeta_hat > 0.0);
        assert!(pencil_tube_check(&c, 1.0, &[0.1], 10, 4).is_err());
        // on the axis ray itself
        assert_eq!(link_distance(&c, &c.north(), &c.north()), 0.0);
    }

    #[test]
    fn hypothesis_examples() {
        let c = ConeSpec::simons();
        let lap = dirichlet_hypotheses(&c, &OperatorSpec::laplace());
        assert!(lap.constants_harmonic && !lap.green_to_zero_at_tip && lap.green_to_zero_at_infinity && !lap.solvable);
        assert_eq!(lap.gamma_plus0, 0.0);
        assert!(!dirichlet_hypotheses(&c, &OperatorSpec::jacobi()).constants_harmonic);
        let shifted = dirichlet_hypotheses(&c, &OperatorSpec::laplace().with_lambda(-1.0));
        assert!(!shifted.constants_harmonic && !shifted.solvable);
        assert!(shifted.green_to_zero_at_tip);
        let c24 = make_cone(2, 4, None).unwrap();
        for op in [OperatorSpec::laplace(), OperatorSpec::jacobi()] {
            for lambda in [0.0, 1.0 / 48.0] {
                let h = dirichlet_hypotheses(&c24, &op.with_lambda(lambda));
                assert!(!h.solvable);
            }
        }
    }
}
