//! Laplace spectrum of the product link `S^p(r1) x S^q(r2)` and the
//! reproducing kernels of its eigenspaces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{dot, sphere_volume, unit_sphere_area, ConeSpec, LinkPoint};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

/// Eigenspace of the link Laplacian indexed by the harmonic degree on each
/// sphere factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMode {
    pub k1: u32,
    pub k2: u32,
    pub mu: f64,
    pub mult: u64,
}

impl LinkMode {
    pub fn new(c: &ConeSpec, k1: u32, k2: u32) -> Self {
        Self {
            k1,
            k2,
            mu: mode_eigenvalue(c, k1, k2),
            mult: dim_harmonic(k1, c.p) * dim_harmonic(k2, c.q),
        }
    }

    pub fn zero() -> Self {
        Self { k1: 0, k2: 0, mu: 0.0, mult: 1 }
    }

    pub fn is_constant(&self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }
}

pub fn mode_eigenvalue(c: &ConeSpec, k1: u32, k2: u32) -> f64 {
    let (pf, qf) = (c.p as f64, c.q as f64);
    let (k1f, k2f) = (k1 as f64, k2 as f64);
    (pf + qf) / pf * k1f * (k1f + pf - 1.0) + (pf + qf) / qf * k2f * (k2f + qf - 1.0)
}

/// Dimension of degree-`k` spherical harmonics on `S^d`.
pub fn dim_harmonic(k: u32, d: u32) -> u64 {
    if k == 0 {
        return 1;
    }
    // (2k+d-1)/(d-1) * binom(k+d-2, k)
    let (k, d) = (k as u64, d as u64);
    let mut binom: u64 = 1;
    for i in 1..=k {
        binom = binom * (d - 2 + i) / i;
    }
    (2 * k + d - 1) * binom / (d - 1)
}

/// All modes with `mu <= mu_max`, ascending in `mu`, ties by `(k1, k2)`.
pub fn enumerate_modes(c: &ConeSpec, mu_max: f64) -> Vec<LinkMode> {
    let mut modes = Vec::new();
    let mut k1 = 0;
    while mode_eigenvalue(c, k1, 0) <= mu_max {
        let mut k2 = 0;
        while mode_eigenvalue(c, k1, k2) <= mu_max {
            modes.push(LinkMode::new(c, k1, k2));
            k2 += 1;
        }
        k1 += 1;
    }
    modes.sort_by(|a, b| a.mu.total_cmp(&b.mu).then((a.k1, a.k2).cmp(&(b.k1, b.k2))));
    modes
}

/// Mode table as CSV with header `k1,k2,mu,mult`.
pub fn modes_csv(modes: &[LinkMode]) -> String {
    let mut out = String::from("k1,k2,mu,mult\n");
    for m in modes {
        out.push_str(&format!("{},{},{},{}\n", m.k1, m.k2, m.mu, m.mult));
    }
    out
}

/// `C_k^{(alpha)}(t)` by the three-term recurrence.
pub fn gegenbauer(k: u32, alpha: f64, t: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 2.0 * alpha * t;
    for m in 2..=k {
        let mf = m as f64;
        let next = (2.0 * t * (mf + alpha - 1.0) * cur - (mf + 2.0 * alpha - 2.0) * prev) / mf;
        prev = cur;
        cur = next;
    }
    cur
}

/// `C_0 .. C_kmax` at `t`, normalized by their value at `t = 1`, so every
/// entry lies in `[-1, 1]`.
pub fn normalized_gegenbauer_table(kmax: u32, alpha: f64, t: f64) -> Vec<f64> {
    let mut vals = Vec::with_capacity(kmax as usize + 1);
    let (mut p0, mut p1) = (1.0, 2.0 * alpha * t);
    let (mut n0, mut n1) = (1.0, 2.0 * alpha);
    vals.push(1.0);
    if kmax >= 1 {
        vals.push(p1 / n1);
    }
    for m in 2..=kmax {
        let mf = m as f64;
        let a = 2.0 * (mf + alpha - 1.0);
        let b = mf + 2.0 * alpha - 2.0;
        let p2 = (a * t * p1 - b * p0) / mf;
        let n2 = (a * n1 - b * n0) / mf;
        // rescale to keep both sequences O(1)
        vals.push(p2 / n2);
        p0 = p1 / n2;
        p1 = p2 / n2;
        n0 = n1 / n2;
        n1 = 1.0;
    }
    vals
}

/// Reproducing kernel `E_k(theta, theta')` of one link eigenspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionKernel {
    pub mode: LinkMode,
    pub p: u32,
    pub q: u32,
    /// `mult / vol(link)`, the diagonal value.
    pub diagonal: f64,
}

impl ProjectionKernel {
    pub fn new(c: &ConeSpec, mode: LinkMode) -> Self {
        Self { mode, p: c.p, q: c.q, diagonal: mode.mult as f64 / c.link_volume() }
    }

    /// Kernel from the factor cosines `(cos alpha1, cos alpha2)`.
    pub fn eval_cosines(&self, t1: f64, t2: f64) -> f64 {
        let a1 = (self.p as f64 - 1.0) / 2.0;
        let a2 = (self.q as f64 - 1.0) / 2.0;
        let z1 = gegenbauer(self.mode.k1, a1, t1) / gegenbauer(self.mode.k1, a1, 1.0);
        let z2 = gegenbauer(self.mode.k2, a2, t2) / gegenbauer(self.mode.k2, a2, 1.0);
        self.diagonal * z1 * z2
    }

    pub fn eval(&self, theta: &LinkPoint, theta_prime: &LinkPoint) -> f64 {
        let (t1, t2) = theta.factor_cosines(theta_prime);
        self.eval_cosines(t1, t2)
    }
}

pub fn eval_projection_kernel(pk: &ProjectionKernel, theta: &LinkPoint, theta_prime: &LinkPoint) -> f64 {
    pk.eval(theta, theta_prime)
}

/// Zonal eigenfunction of `mode` about `pole`, scaled to sup-norm one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonalHarmonic {
    pub mode: LinkMode,
    pub pole: LinkPoint,
}

impl ZonalHarmonic {
    pub fn eval(&self, theta: &LinkPoint) -> f64 {
        let (t1, t2) = theta.factor_cosines(&self.pole);
        let d1 = theta.u1.len() as f64 - 1.0;
        let d2 = theta.u2.len() as f64 - 1.0;
        let z = |k: u32, alpha: f64, t: f64| gegenbauer(k, alpha, t) / gegenbauer(k, alpha, 1.0);
        z(self.mode.k1, (d1 - 1.0) / 2.0, t1) * z(self.mode.k2, (d2 - 1.0) / 2.0, t2)
    }
}

/// Tensor Gauss–Legendre rule in the polar angles of each sphere factor,
/// measured from `poles`. Exact up to quadrature error for functions that
/// depend on the point only through those two polar angles.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub nodes1: usize,
    pub nodes2: usize,
    pub poles: Option<LinkPoint>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes1: 48, nodes2: 48, poles: None }
    }
}

/// `cos(phi) pole + sin(phi) w` with `w` a fixed unit vector orthogonal to `pole`.
fn polar_frame(pole: &[f64]) -> Vec<f64> {
    let k = (0..pole.len()).min_by(|&i, &j| pole[i].abs().total_cmp(&pole[j].abs())).unwrap();
    let mut w = vec![0.0; pole.len()];
    w[k] = 1.0;
    let c = pole[k];
    for (wi, pi) in w.iter_mut().zip(pole) {
        *wi -= c * pi;
    }
    let n = dot(&w, &w).sqrt();
    w.into_iter().map(|x| x / n).collect()
}

pub fn quadrature_on_link<F: FnMut(&LinkPoint) -> f64>(
    c: &ConeSpec,
    mut f: F,
    rule: &QuadratureSpec,
) -> Result<f64> {
    if rule.nodes1 < 2 || rule.nodes2 < 2 {
        return Err(Error::InvalidInput("link quadrature needs >= 2 nodes per factor".into()));
    }
    let poles = rule.poles.clone().unwrap_or_else(|| c.north());
    let w1 = polar_frame(&poles.u1);
    let w2 = polar_frame(&poles.u2);
    let g1 = GaussLegendre::new(rule.nodes1);
    let g2 = GaussLegendre::new(rule.nodes2);
    let half = 0.5 * PI;
    // measure on S^d(rho): rho^d |S^{d-1}| sin^{d-1}(phi) dphi
    let m1 = c.r1.powi(c.p as i32) * unit_sphere_area(c.p - 1);
    let m2 = c.r2.powi(c.q as i32) * unit_sphere_area(c.q - 1);
    let mut total = 0.0;
    for (x1, wt1) in g1.nodes.iter().zip(&g1.weights) {
        let phi1 = half * (x1 + 1.0);
        let (s1, c1) = phi1.sin_cos();
        let u1: Vec<f64> = poles.u1.iter().zip(&w1).map(|(p, w)| c1 * p + s1 * w).collect();
        let jac1 = wt1 * half * m1 * s1.powi(c.p as i32 - 1);
        let mut inner = 0.0;
        for (x2, wt2) in g2.nodes.iter().zip(&g2.weights) {
            let phi2 = half * (x2 + 1.0);
            let (s2, c2) = phi2.sin_cos();
            let u2: Vec<f64> = poles.u2.iter().zip(&w2).map(|(p, w)| c2 * p + s2 * w).collect();
            let val = f(&LinkPoint { u1: u1.clone(), u2 });
            if !val.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite integrand at ({phi1}, {phi2})")));
            }
            inner += wt2 * half * m2 * s2.powi(c.q as i32 - 1) * val;
        }
        total += jac1 * inner;
    }
    Ok(total)
}

/// Link volume from the closed-form sphere areas.
pub fn link_volume(c: &ConeSpec) -> f64 {
    sphere_volume(c.p, c.r1) * sphere_volume(c.q, c.r2)
}
