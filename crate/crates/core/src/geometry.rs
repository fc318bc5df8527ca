//! Model cones over products of round spheres, their intrinsic metric, the
//! curvature scale `<A> = a/r` and the checks built on it.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Cone over `S^p(r1) x S^q(r2)` in `R^{p+q+2}`, with tip at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub p: u32,
    pub q: u32,
    /// Dimension of the cone, `p + q + 1`.
    pub n: u32,
    pub r1: f64,
    pub r2: f64,
    /// `|A|^2 = kappa / r^2`.
    pub kappa: f64,
    /// Curvature scale constant, `<A> = a / r`.
    pub a: f64,
    /// Catalog metadata: the cone is area-minimizing when `p + q >= 6`.
    pub minimizing: bool,
}

/// Cone catalog entry as stored in JSON documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub p: u32,
    pub q: u32,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl CatalogEntry {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("cone catalog: {e}")))
    }

    pub fn build(&self) -> Result<ConeSpec> {
        make_cone(self.p, self.q, self.a)
    }
}

/// Build a catalog cone. `a_override` must satisfy `a >= sqrt(p + q)`.
pub fn make_cone(p: u32, q: u32, a_override: Option<f64>) -> Result<ConeSpec> {
    if p < 2 || q < 2 {
        return Err(Error::InvalidCone(format!(
            "link factors must have dimension >= 2, got p={p}, q={q}"
        )));
    }
    let pf = p as f64;
    let qf = q as f64;
    let kappa = pf + qf;
    let a = match a_override {
        None => kappa.sqrt(),
        Some(a) if a.is_finite() && a >= kappa.sqrt() => a,
        Some(a) => {
            return Err(Error::InvalidCone(format!(
                "a = {a} violates <A> >= |A| (needs a >= sqrt({kappa}))"
            )))
        }
    };
    Ok(ConeSpec {
        p,
        q,
        n: p + q + 1,
        r1: (pf / kappa).sqrt(),
        r2: (qf / kappa).sqrt(),
        kappa,
        a,
        minimizing: p + q >= 6,
    })
}

impl ConeSpec {
    /// The Simons cone `C_{3,3}`.
    pub fn simons() -> Self {
        make_cone(3, 3, None).expect("catalog cone")
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// `(n - 2) / 2`, the midpoint of every indicial root pair (negated).
    pub fn half_dim(&self) -> f64 {
        (self.dim() - 2.0) / 2.0
    }

    pub fn curvature_sq(&self, r: f64) -> f64 {
        self.kappa / (r * r)
    }

    pub fn s_transform(&self) -> STransform {
        STransform::new(self.a)
    }

    pub fn link_volume(&self) -> f64 {
        sphere_volume(self.p, self.r1) * sphere_volume(self.q, self.r2)
    }

    /// Principal curvatures of the link inside the unit sphere, as
    /// `(value, multiplicity)` pairs.
    pub fn link_principal_curvatures(&self) -> [(f64, u32); 2] {
        let pf = self.p as f64;
        let qf = self.q as f64;
        [((qf / pf).sqrt(), self.p), (-(pf / qf).sqrt(), self.q)]
    }

    /// Chart radius `Gamma * delta(x)` used for bounded-geometry charts.
    pub fn chart_radius(&self, x: &ConePoint, gamma: f64) -> f64 {
        gamma * self.s_transform().delta(x.r)
    }

    pub fn north(&self) -> LinkPoint {
        LinkPoint::north(self.p, self.q)
    }

    pub fn random_link_point<R: Rng + ?Sized>(&self, rng: &mut R) -> LinkPoint {
        LinkPoint::random(self.p, self.q, rng)
    }
}

/// Area of the round sphere `S^d` of radius `rho`.
pub fn sphere_volume(d: u32, rho: f64) -> f64 {
    unit_sphere_area(d) * rho.powi(d as i32)
}

/// Area of the unit sphere `S^d` in `R^{d+1}`.
pub fn unit_sphere_area(d: u32) -> f64 {
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 1.0) * unit_sphere_area(d - 2),
    }
}

/// Point on the link: one unit vector per sphere factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPoint {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl LinkPoint {
    pub fn new(u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        for u in [&u1, &u2] {
            let norm = dot(u, u).sqrt();
            if u.len() < 3 || !((norm - 1.0).abs() < 1e-9) {
                return Err(Error::InvalidInput(format!(
                    "link factor must be a unit vector of length >= 3 (norm {norm})"
                )));
            }
        }
        Ok(Self { u1, u2 })
    }

    pub fn north(p: u32, q: u32) -> Self {
        Self::from_polar(p, q, 0.0, 0.0)
    }

    /// `cos(phi) e_0 + sin(phi) e_1` in each factor.
    pub fn from_polar(p: u32, q: u32, phi1: f64, phi2: f64) -> Self {
        let mut u1 = vec![0.0; p as usize + 1];
        let mut u2 = vec![0.0; q as usize + 1];
        u1[0] = phi1.cos();
        u1[1] = phi1.sin();
        u2[0] = phi2.cos();
        u2[1] = phi2.sin();
        Self { u1, u2 }
    }

    pub fn random<R: Rng + ?Sized>(p: u32, q: u32, rng: &mut R) -> Self {
        Self {
            u1: random_unit(p as usize + 1, rng),
            u2: random_unit(q as usize + 1, rng),
        }
    }

    pub fn antipode(&self) -> Self {
        Self {
            u1: self.u1.iter().map(|x| -x).collect(),
            u2: self.u2.iter().map(|x| -x).collect(),
        }
    }

    /// Great-circle angles `(alpha1, alpha2)` to `other` in each factor.
    pub fn factor_angles(&self, other: &LinkPoint) -> (f64, f64) {
        (angle_between(&self.u1, &other.u1), angle_between(&self.u2, &other.u2))
    }

    /// Cosines of the factor angles.
    pub fn factor_cosines(&self, other: &LinkPoint) -> (f64, f64) {
        (
            dot(&self.u1, &other.u1).clamp(-1.0, 1.0),
            dot(&self.u2, &other.u2).clamp(-1.0, 1.0),
        )
    }

    /// Move a fraction `s` of the way along the product geodesic to `other`.
    pub fn geodesic_towards(&self, other: &LinkPoint, s: f64) -> LinkPoint {
        LinkPoint {
            u1: slerp(&self.u1, &other.u1, s),
            u2: slerp(&self.u2, &other.u2, s),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Angle between unit vectors, accurate near 0 and near pi.
pub(crate) fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    let c = dot(u, v);
    if c >= 0.0 {
        let d: f64 = u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        2.0 * (0.5 * d).min(1.0).asin()
    } else {
        let d: f64 = u.iter().zip(v).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
        PI - 2.0 * (0.5 * d).min(1.0).asin()
    }
}

fn slerp(u: &[f64], v: &[f64], s: f64) -> Vec<f64> {
    let alpha = angle_between(u, v);
    if alpha < 1e-15 {
        return u.to_vec();
    }
    // tangent direction at u pointing to v
    let c = dot(u, v);
    let mut w: Vec<f64> = v.iter().zip(u).map(|(vi, ui)| vi - c * ui).collect();
    let wn = dot(&w, &w).sqrt();
    if wn < 1e-15 {
        // antipodal: any tangent direction is a geodesic
        w = vec![0.0; u.len()];
        let k = (0..u.len()).min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap();
        w[k] = 1.0;
        let c = u[k];
        for (wi, ui) in w.iter_mut().zip(u) {
            *wi -= c * ui;
        }
    }
    let wn = dot(&w, &w).sqrt();
    let (sn, cs) = (s * alpha).sin_cos();
    u.iter().zip(&w).map(|(ui, wi)| cs * ui + sn * wi / wn).collect()
}

/// Point of the cone away from the tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub r: f64,
    pub theta: LinkPoint,
}

impl ConePoint {
    pub fn new(r: f64, theta: LinkPoint) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
        }
        Ok(Self { r, theta })
    }

    pub fn scaled(&self, tau: f64) -> Self {
        Self { r: self.r * tau, theta: self.theta.clone() }
    }
}

/// Geodesic distance on the link `S^p(r1) x S^q(r2)`.
pub fn link_distance(c: &ConeSpec, x: &LinkPoint, y: &LinkPoint) -> f64 {
    let (a1, a2) = x.factor_angles(y);
    (c.r1 * c.r1 * a1 * a1 + c.r2 * c.r2 * a2 * a2).sqrt()
}

/// Intrinsic distance of the metric cone `dr^2 + r^2 g_link`.
pub fn cone_distance(c: &ConeSpec, x: &ConePoint, y: &ConePoint) -> f64 {
    let angle = link_distance(c, &x.theta, &y.theta).min(PI);
    let d2 = x.r * x.r + y.r * y.r - 2.0 * x.r * y.r * angle.cos();
    let radial = (x.r - y.r).abs();
    // clamp rounding below the radial lower bound
    d2.max(0.0).sqrt().max(radial)
}

/// `<A> = a / r` together with its reciprocal `delta = r / a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct STransform {
    pub a: f64,
    pub lipschitz_constant: f64,
}

impl STransform {
    pub fn new(a: f64) -> Self {
        Self { a, lipschitz_constant: 1.0 / a }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.a / r
    }

    pub fn delta(&self, r: f64) -> f64 {
        r / self.a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PencilApex {
    Tip,
    Point(ConePoint),
}

/// Approach region `{x : delta(x) > omega * d(x, apex)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pencil {
    pub apex: PencilApex,
    pub omega: f64,
}

pub fn pencil_membership(c: &ConeSpec, pencil: &Pencil, x: &ConePoint) -> bool {
    let st = c.s_transform();
    match &pencil.apex {
        PencilApex::Tip => st.lipschitz_constant > pencil.omega,
        PencilApex::Point(apex) => st.delta(x.r) > pencil.omega * cone_distance(c, x, apex),
    }
}

/// One row of evidence attached to a check report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub index: usize,
    pub value: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub max_ratio: f64,
    pub certified_constant: f64,
    pub witnesses: Vec<Witness>,
}

/// Seeded pairs with log-uniform radii in `[r_lo, r_hi]` and uniform link points.
pub fn sample_pairs<R: Rng + ?Sized>(
    c: &ConeSpec,
    count: usize,
    r_lo: f64,
    r_hi: f64,
    rng: &mut R,
) -> Vec<(ConePoint, ConePoint)> {
    let (lo, hi) = (r_lo.ln(), r_hi.ln());
    let point = |rng: &mut R| ConePoint {
        r: rng.random_range(lo..hi).exp(),
        theta: c.random_link_point(rng),
    };
    (0..count).map(|_| (point(rng), point(rng))).collect()
}

/// Lipschitz check of `delta = 1/<A>`: both `|delta(x) - delta(y)| / d(x,y)`
/// and `delta(x) / d(x, tip)` must stay below `1/a + tol`.
pub fn s_distance_lower_bound_check(
    c: &ConeSpec,
    pairs: &[(ConePoint, ConePoint)],
    tol: f64,
) -> Result<CheckReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("empty sample list".into()));
    }
    let st = c.s_transform();
    let bound = st.lipschitz_constant + tol;
    let mut max_ratio: f64 = 0.0;
    let mut max_tip: f64 = 0.0;
    let mut worst = 0;
    for (i, (x, y)) in pairs.iter().enumerate() {
        let d = cone_distance(c, x, y);
        if d > 0.0 {
            let ratio = (st.delta(x.r) - st.delta(y.r)).abs() / d;
            if ratio > max_ratio {
                max_ratio = ratio;
                worst = i;
            }
            if ratio > bound {
                return Err(Error::CheckFailed(format!(
                    "pair {i} violates the Lipschitz bound: ratio {ratio} > {bound}"
                )));
            }
        }
        for z in [x, y] {
            let tip_ratio = st.delta(z.r) / z.r;
            max_tip = max_tip.max(tip_ratio);
            if tip_ratio > bound {
                return Err(Error::CheckFailed(format!(
                    "pair {i}: delta/dist(tip) = {tip_ratio} > {bound}"
                )));
            }
        }
    }
    Ok(CheckReport {
        check: "s_transform_lipschitz".into(),
        max_ratio,
        certified_constant: st.lipschitz_constant,
        witnesses: vec![
            Witness { index: worst, value: max_ratio, note: "max |delta(x)-delta(y)|/d(x,y)".into() },
            Witness { index: 0, value: max_tip, note: "max delta(x)/dist(x,tip)".into() },
        ],
    })
}

/// The radial-out, link-arc, radial-in curve used to certify uniformity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeLegCurve {
    pub rho: f64,
    pub out_leg: f64,
    pub arc_leg: f64,
    pub in_leg: f64,
}

impl ThreeLegCurve {
    pub fn between(c: &ConeSpec, x: &ConePoint, y: &ConePoint) -> Self {
        let rho = x.r.max(y.r);
        Self {
            rho,
            out_leg: rho - x.r,
            arc_leg: rho * link_distance(c, &x.theta, &y.theta),
            in_leg: rho - y.r,
        }
    }

    pub fn length(&self) -> f64 {
        self.out_leg + self.arc_leg + self.in_leg
    }

    /// Samples `(arclength from x, radius)` along the curve, including the
    /// corners and the point where both ends are equally far.
    pub fn samples(&self, per_leg: usize) -> Vec<(f64, f64)> {
        let total = self.length();
        let r_x = self.rho - self.out_leg;
        let radius_at = |s: f64| {
            if s <= self.out_leg {
                r_x + s
            } else if s <= self.out_leg + self.arc_leg {
                self.rho
            } else {
                self.rho - (s - self.out_leg - self.arc_leg)
            }
        };
        let mut out = Vec::with_capacity(3 * per_leg + 4);
        let breaks = [0.0, self.out_leg, self.out_leg + self.arc_leg, total];
        for leg in 0..3 {
            let (s0, s1) = (breaks[leg], breaks[leg + 1]);
            for k in 0..=per_leg {
                let s = s0 + (s1 - s0) * k as f64 / per_leg as f64;
                out.push((s, radius_at(s)));
            }
        }
        out.push((0.5 * total, radius_at(0.5 * total)));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub check: String,
    pub c_uniform: f64,
    pub c_max: f64,
    pub witness_curves: Vec<(usize, ThreeLegCurve, f64)>,
}

/// Smallest `c` such that every pair is joined by a three-leg curve with
/// `l(gamma) <= c d(x,y)` and `min(l(x,z), l(z,y)) <= c delta(z)`.
pub fn uniformity_certificate(
    c: &ConeSpec,
    pairs: &[(ConePoint, ConePoint)],
    c_max: f64,
) -> Result<UniformityReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("empty pair list".into()));
    }
    let st = c.s_transform();
    let mut per_pair = Vec::with_capacity(pairs.len());
    for (i, (x, y)) in pairs.iter().enumerate() {
        let d = cone_distance(c, x, y);
        let curve = ThreeLegCurve::between(c, x, y);
        let total = curve.length();
        let mut need = if d > 0.0 { total / d } else { 1.0 };
        for (s, r) in curve.samples(16) {
            let l_min = s.min(total - s).max(0.0);
            need = need.max(l_min / st.delta(r));
        }
        need = need.max(1.0);
        if !(need <= c_max) {
            return Err(Error::CheckFailed(format!(
                "pair {i} needs c = {need} > cap {c_max}"
            )));
        }
        per_pair.push((i, curve, need));
    }
    let c_uniform = per_pair.iter().map(|w| w.2).fold(1.0, f64::max);
    per_pair.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    per_pair.truncate(5);
    Ok(UniformityReport {
        check: "s_uniformity".into(),
        c_uniform,
        c_max,
        witness_curves: per_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    /// `|A|^2` and mean curvature of the level set `q|x|^2 - p|y|^2 = 0`
    /// at a point with `|x| = r1 r`, `|y| = r2 r`, from a finite-difference
    /// Hessian projected to the tangent space.
    fn level_set_curvature(p: usize, q: usize, r: f64) -> (f64, f64) {
        let (pf, qf) = (p as f64, q as f64);
        let dim = p + q + 2;
        let f = |z: &[f64]| {
            let x2: f64 = z[..p + 1].iter().map(|v| v * v).sum();
            let y2: f64 = z[p + 1..].iter().map(|v| v * v).sum();
            qf * x2 - pf * y2
        };
        // a generic point on the cone
        let mut z = vec![0.0; dim];
        let r1 = (pf / (pf + qf)).sqrt() * r;
        let r2 = (qf / (pf + qf)).sqrt() * r;
        let dir1: Vec<f64> = (0..p + 1).map(|i| 1.0 + i as f64).collect();
        let dir2: Vec<f64> = (0..q + 1).map(|i| 2.0 - 0.3 * i as f64).collect();
        let n1 = dot(&dir1, &dir1).sqrt();
        let n2 = dot(&dir2, &dir2).sqrt();
        for i in 0..=p {
            z[i] = r1 * dir1[i] / n1;
        }
        for j in 0..=q {
            z[p + 1 + j] = r2 * dir2[j] / n2;
        }
        let h = 1e-3 * r;
        let mut grad = vec![0.0; dim];
        let mut hess = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            grad[i] = (f(&zp) - f(&zm)) / (2.0 * h);
            for j in 0..dim {
                let e = |si: f64, sj: f64| {
                    let mut w = z.clone();
                    w[i] += si * h;
                    w[j] += sj * h;
                    f(&w)
                };
                hess[i][j] = (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * h * h);
            }
        }
        let gn = dot(&grad, &grad).sqrt();
        let nu: Vec<f64> = grad.iter().map(|g| g / gn).collect();
        // projector onto the tangent space
        let proj = |i: usize, j: usize| (if i == j { 1.0 } else { 0.0 }) - nu[i] * nu[j];
        let mut ph = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    for l in 0..dim {
                        s += proj(i, k) * hess[k][l] * proj(l, j);
                    }
                }
                ph[i][j] = s / gn;
            }
        }
        let norm2: f64 = ph.iter().flatten().map(|v| v * v).sum();
        let trace: f64 = (0..dim).map(|i| ph[i][i]).sum();
        (norm2, trace)
    }

    #[test]
    fn catalog_constants_match_level_set_curvature() {
        for (p, q, kappa, n, minimizing) in [(3, 3, 6.0, 7, true), (2, 4, 6.0, 7, true), (2, 2, 4.0, 5, false)] {
            let c = make_cone(p, q, None).unwrap();
            assert_eq!(c.n, n);
            assert_eq!(c.minimizing, minimizing);
            assert!((c.kappa - kappa).abs() < 1e-15);
            assert!((c.a - kappa.sqrt()).abs() < 1e-15);
            assert!((c.r1 * c.r1 + c.r2 * c.r2 - 1.0).abs() < 1e-15);
            for r in [1.0, 2.5] {
                let (a2, h) = level_set_curvature(p as usize, q as usize, r);
                assert!((a2 - c.curvature_sq(r)).abs() < 1e-6 * c.curvature_sq(r), "{a2}");
                assert!(h.abs() < 1e-6);
            }
            let [(k1, m1), (k2, m2)] = c.link_principal_curvatures();
            assert!((m1 as f64 * k1 + m2 as f64 * k2).abs() < 1e-14);
            assert!((m1 as f64 * k1 * k1 + m2 as f64 * k2 * k2 - c.kappa).abs() < 1e-12);
        }
        let c = make_cone(2, 4, None).unwrap();
        assert!((c.r1 - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((c.r2 - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn make_cone_rejects_out_of_catalog_input() {
        assert!(matches!(make_cone(1, 3, None), Err(Error::InvalidCone(_))));
        assert!(matches!(make_cone(0, 5, None), Err(Error::InvalidCone(_))));
        assert!(matches!(make_cone(3, 3, Some(2.0)), Err(Error::InvalidCone(_))));
        assert!(make_cone(3, 3, Some(3.0)).is_ok());
    }

    #[test]
    fn catalog_json_round_trip() {
        let entry = CatalogEntry::from_json(r#"{"p":3,"q":3,"a":null,"seed":42}"#).unwrap();
        assert_eq!(entry.seed, Some(42));
        assert_eq!(entry.build().unwrap(), ConeSpec::simons());
        assert!(CatalogEntry::from_json(r#"{"p":3,"q":3,"bogus":1}"#).is_err());
    }

    #[test]
    fn sphere_volumes_match_gamma_formula() {
        use statrs::function::gamma::gamma;
        for d in 0..9u32 {
            let df = d as f64;
            let expected = 2.0 * PI.powf((df + 1.0) / 2.0) / gamma((df + 1.0) / 2.0);
            assert!((unit_sphere_area(d) - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn cone_distance_examples() {
        let c = ConeSpec::simons();
        let th = c.north();
        let x = ConePoint::new(1.0, th.clone()).unwrap();
        assert_eq!(cone_distance(&c, &x, &x), 0.0);
        let y = ConePoint::new(2.0, th.clone()).unwrap();
        assert!((cone_distance(&c, &x, &y) - 1.0).abs() < 1e-15);
        let z = ConePoint::new(1.0, th.antipode()).unwrap();
        assert!((link_distance(&c, &th, &z.theta) - PI).abs() < 1e-12);
        assert!((cone_distance(&c, &x, &z) - 2.0).abs() < 1e-12);
    }

    /// Broken radial/angular paths: go radially to radius s, travel along
    /// the link, come back radially. Minimizing over s and over routing
    /// through the tip never beats the closed form.
    #[test]
    fn cone_distance_matches_broken_path_minimum() {
        let c = ConeSpec::simons();
        let mut rng = seeded_rng(3);
        for _ in 0..50 {
            let x = ConePoint::new(rng.random_range(0.5..2.0), c.random_link_point(&mut rng)).unwrap();
            let y = ConePoint::new(rng.random_range(0.5..2.0), c.random_link_point(&mut rng)).unwrap();
            let d = cone_distance(&c, &x, &y);
            let ang = link_distance(&c, &x.theta, &y.theta);
            // polygonal approximation of the geodesic in the flat sector
            let mut best = x.r + y.r;
            if ang < PI {
                let steps = 4000;
                let mut len = 0.0;
                let (px, py) = (x.r, 0.0);
                let (qx, qy) = (y.r * ang.cos(), y.r * ang.sin());
                let mut prev = (px, py);
                for k in 1..=steps {
                    let s = k as f64 / steps as f64;
                    let cur = (px + s * (qx - px), py + s * (qy - py));
                    len += ((cur.0 - prev.0).powi(2) + (cur.1 - prev.1).powi(2)).sqrt();
                    prev = cur;
                }
                best = best.min(len);
            }
            assert!((d - best).abs() < 1e-9, "{d} vs {best}");
        }
    }

    #[test]
    fn lipschitz_check_examples() {
        let c = ConeSpec::simons();
        let th = c.north();
        let radial = vec![(ConePoint::new(1.0, th.clone()).unwrap(), ConePoint::new(2.0, th).unwrap())];
        let rep = s_distance_lower_bound_check(&c, &radial, 1e-12).unwrap();
        assert!((rep.max_ratio - 1.0 / c.a).abs() < 1e-15);

        let mut rng = seeded_rng(11);
        let pairs = sample_pairs(&c, 1000, 0.01, 100.0, &mut rng);
        let rep = s_distance_lower_bound_check(&c, &pairs, 1e-9).unwrap();
        assert!(rep.max_ratio <= 1.0 / 6f64.sqrt() + 1e-9);

        let scaled: Vec<_> = pairs.iter().map(|(x, y)| (x.scaled(4.0), y.scaled(4.0))).collect();
        let rep2 = s_distance_lower_bound_check(&c, &scaled, 1e-9).unwrap();
        assert_eq!(rep.max_ratio, rep2.max_ratio);
    }

    #[test]
    fn uniformity_examples() {
        let c = ConeSpec::simons();
        let th = c.north();
        let radial = vec![(ConePoint::new(1.0, th.clone()).unwrap(), ConePoint::new(3.0, th.clone()).unwrap())];
        let rep = uniformity_certificate(&c, &radial, 1e3).unwrap();
        // the segment is the curve (length ratio 1); the twisted cone condition
        // at the midpoint r = 2 needs a * 1 / 2
        assert!((rep.c_uniform - 0.5 * c.a).abs() < 1e-12);

        let anti = vec![(ConePoint::new(1.0, th.clone()).unwrap(), ConePoint::new(1.0, th.antipode()).unwrap())];
        let rep = uniformity_certificate(&c, &anti, 1e3).unwrap();
        assert!(rep.c_uniform.is_finite());
        let anti8: Vec<_> = anti.iter().map(|(x, y)| (x.scaled(8.0), y.scaled(8.0))).collect();
        assert_eq!(uniformity_certificate(&c, &anti8, 1e3).unwrap().c_uniform, rep.c_uniform);

        assert!(uniformity_certificate(&c, &anti, 1.0).is_err());
    }

    #[test]
    fn pencil_examples() {
        let c = ConeSpec::simons();
        let th = c.north();
        let x = ConePoint::new(0.3, th.clone()).unwrap();
        let inside = Pencil { apex: PencilApex::Tip, omega: 0.5 / c.a };
        let outside = Pencil { apex: PencilApex::Tip, omega: 2.0 / c.a };
        assert!(pencil_membership(&c, &inside, &x));
        assert!(!pencil_membership(&c, &outside, &x));
        let apex = ConePoint::new(1.0, th.clone()).unwrap();
        let near = Pencil { apex: PencilApex::Point(apex), omega: 0.1 };
        assert!(pencil_membership(&c, &near, &ConePoint::new(1.01, th).unwrap()));
    }

    proptest! {
        #[test]
        fn cone_distance_is_a_metric(seed in 0u64..10_000) {
            let c = make_cone(2, 4, None).unwrap();
            let mut rng = seeded_rng(seed);
            let pts: Vec<ConePoint> = (0..3)
                .map(|_| ConePoint::new(rng.random_range(0.1..5.0), c.random_link_point(&mut rng)).unwrap())
                .collect();
            let d = |i: usize, j: usize| cone_distance(&c, &pts[i], &pts[j]);
            prop_assert!(d(0, 1) >= 0.0);
            prop_assert!((d(0, 1) - d(1, 0)).abs() <= 1e-12);
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
        }

        #[test]
        fn pencil_membership_is_scale_invariant(seed in 0u64..10_000, k in -3i32..4) {
            let c = ConeSpec::simons();
            let mut rng = seeded_rng(seed);
            let tau = 2f64.powi(k);
            let apex = ConePoint::new(rng.random_range(0.5..2.0), c.random_link_point(&mut rng)).unwrap();
            let x = ConePoint::new(rng.random_range(0.5..2.0), c.random_link_point(&mut rng)).unwrap();
            let omega = rng.random_range(0.01..1.0);
            let pen = Pencil { apex: PencilApex::Point(apex.clone()), omega };
            let pen_s = Pencil { apex: PencilApex::Point(apex.scaled(tau)), omega };
            prop_assert_eq!(pencil_membership(&c, &pen, &x), pencil_membership(&c, &pen_s, &x.scaled(tau)));
            // <A> anticommutes with scalings
            let st = c.s_transform();
            prop_assert!((st.value(tau * x.r) - st.value(x.r) / tau).abs() <= 1e-15 * st.value(x.r) / tau);
        }
    }
}
