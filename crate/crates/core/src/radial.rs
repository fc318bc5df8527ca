//! The operator family `L_lambda = -Delta - c_A |A|^2 - lambda <A>^2`,
//! separated into link modes: indicial roots, adaptedness, the minimal
//! supersolution and the mode-sum Green's function.

use serde::{Deserialize, Serialize};

use crate::geometry::{ConePoint, ConeSpec, LinkPoint};
use crate::spectrum::{enumerate_modes, normalized_gegenbauer_table, LinkMode};
use crate::{Error, Result};

/// Member of the family `L_lambda`; `c_a = 0` is the Laplacian, `c_a = 1` the
/// Jacobi operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub c_a: f64,
    pub lambda: f64,
}

impl OperatorSpec {
    pub fn new(c_a: f64, lambda: f64) -> Result<Self> {
        if !(c_a >= 0.0 && c_a.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("operator c_A={c_a}, lambda={lambda}")));
        }
        Ok(Self { c_a, lambda })
    }

    pub fn laplace() -> Self {
        Self { c_a: 0.0, lambda: 0.0 }
    }

    pub fn jacobi() -> Self {
        Self { c_a: 1.0, lambda: 0.0 }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn name(&self) -> String {
        let base = if self.c_a == 0.0 {
            "laplace".to_string()
        } else if self.c_a == 1.0 {
            "jacobi".to_string()
        } else {
            format!("c_a={}", self.c_a)
        };
        if self.lambda == 0.0 {
            base
        } else {
            format!("{base}-lambda={}", self.lambda)
        }
    }

    /// Coefficient `w` of the zeroth-order term `-w / r^2`.
    pub fn zeroth_order(&self, c: &ConeSpec) -> f64 {
        self.c_a * c.kappa + self.lambda * c.a * c.a
    }

    /// Radial potential `mu_k - c_A kappa - lambda a^2` of one mode.
    pub fn mode_potential(&self, c: &ConeSpec, mode: &LinkMode) -> f64 {
        mode.mu - self.zeroth_order(c)
    }

    /// Principal eigenvalue of `delta^2 L` for the unshifted operator.
    pub fn lambda_star(&self, c: &ConeSpec) -> f64 {
        let h = c.half_dim();
        (h * h - self.c_a * c.kappa) / (c.a * c.a)
    }

    /// `lambda < lambda*`, with values within rounding of the threshold
    /// treated as critical.
    pub fn is_subcritical(&self, c: &ConeSpec) -> bool {
        let ls = self.lambda_star(c);
        self.lambda < ls - DEGENERACY_TOL * ls.abs().max(1.0)
    }
}

/// Exponents of the homogeneous solutions `r^gamma phi_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicialRoots {
    pub mode: LinkMode,
    pub disc: f64,
    /// Real parts; for oscillatory modes both equal `-(n-2)/2`.
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Imaginary part `sqrt(-disc)` for oscillatory modes, else zero.
    pub imag: f64,
    pub degenerate: bool,
    pub oscillatory: bool,
}

const DEGENERACY_TOL: f64 = 1e-12;

pub fn indicial_roots(c: &ConeSpec, op: &OperatorSpec, mode: &LinkMode) -> IndicialRoots {
    let h = c.half_dim();
    let v = op.mode_potential(c, mode);
    let disc = h * h + v;
    let scale = (h * h).max(v.abs()).max(1.0);
    let degenerate = disc.abs() <= DEGENERACY_TOL * scale;
    let oscillatory = !degenerate && disc < 0.0;
    let (gp, gm, imag) = if degenerate {
        (-h, -h, 0.0)
    } else if oscillatory {
        (-h, -h, (-disc).sqrt())
    } else {
        let s = disc.sqrt();
        (-h + s, -h - s, 0.0)
    };
    IndicialRoots { mode: *mode, disc, gamma_plus: gp, gamma_minus: gm, imag, degenerate, oscillatory }
}

impl IndicialRoots {
    pub fn admits_green(&self) -> bool {
        !self.degenerate && !self.oscillatory && self.disc > 0.0
    }

    /// `gamma (gamma + n - 2) - V` at both roots.
    pub fn residuals(&self, c: &ConeSpec, op: &OperatorSpec) -> (f64, f64) {
        let v = op.mode_potential(c, &self.mode);
        let n2 = c.dim() - 2.0;
        let res = |g: f64| g * (g + n2) - v;
        (res(self.gamma_plus), res(self.gamma_minus))
    }
}

/// Exact `L` applied to `r^gamma phi_k`, divided by `r^(gamma-2)`.
pub fn homogeneous_residual(c: &ConeSpec, op: &OperatorSpec, mode: &LinkMode, gamma: f64) -> f64 {
    let n = c.dim();
    -(gamma * (gamma - 1.0) + (n - 1.0) * gamma) + op.mode_potential(c, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptednessCertificate {
    pub k_l: f64,
    /// `lambda* - lambda`.
    pub eps_l: f64,
    pub lambda_star: f64,
    pub disc_mode0: f64,
    pub supersolution_exponent: f64,
    pub adapted: bool,
    pub weakly_coercive: bool,
}

pub fn adaptedness_certificate(c: &ConeSpec, op: &OperatorSpec) -> AdaptednessCertificate {
    let lambda_star = op.lambda_star(c);
    let roots0 = indicial_roots(c, op, &LinkMode::zero());
    let weakly_coercive = roots0.admits_green() && op.is_subcritical(c);
    let k_l = (op.zeroth_order(c).abs() / (c.a * c.a)).max(1.0);
    AdaptednessCertificate {
        k_l,
        eps_l: lambda_star - op.lambda,
        lambda_star,
        disc_mode0: roots0.disc,
        supersolution_exponent: -c.half_dim(),
        adapted: weakly_coercive && k_l.is_finite(),
        weakly_coercive,
    }
}

/// `u = r^{-(n-2)/2}` with `L_lambda u = (lambda* - lambda) <A>^2 u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Supersolution {
    pub exponent: f64,
    pub margin: f64,
}

impl Supersolution {
    pub fn eval(&self, r: f64) -> f64 {
        r.powf(self.exponent)
    }

    /// `L_lambda u` from the exact radial derivatives.
    pub fn apply_operator(&self, c: &ConeSpec, op: &OperatorSpec, r: f64) -> f64 {
        let g = self.exponent;
        let u = self.eval(r);
        let u_r = g * u / r;
        let u_rr = g * (g - 1.0) * u / (r * r);
        -(u_rr + (c.dim() - 1.0) / r * u_r) - op.zeroth_order(c) / (r * r) * u
    }
}

pub fn supersolution_factory(c: &ConeSpec, op: &OperatorSpec) -> Result<Supersolution> {
    let lambda_star = op.lambda_star(c);
    if !op.is_subcritical(c) {
        return Err(Error::NotCoercive { lambda: op.lambda, lambda_star });
    }
    Ok(Supersolution { exponent: -c.half_dim(), margin: lambda_star - op.lambda })
}

/// Bottom of the spectrum of the unfolded operator `-d_t^2 + V_k` on the
/// cylinder `R x link`, minimized over the modes with `mu <= mu_max`.
pub fn unfolded_bottom(c: &ConeSpec, op: &OperatorSpec, mu_max: f64) -> (f64, LinkMode) {
    let h = c.half_dim();
    let w0 = op.c_a * c.kappa;
    enumerate_modes(c, mu_max)
        .into_iter()
        .map(|m| (h * h + m.mu - w0, m))
        .fold((f64::INFINITY, LinkMode::zero()), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// Radial Green's function of one mode with `s^{n-1} [d_r g](s) = -1`.
pub fn mode_green(roots: &IndicialRoots, r: f64, s: f64) -> Result<f64> {
    if !roots.admits_green() {
        return Err(Error::Criticality { k1: roots.mode.k1, k2: roots.mode.k2, disc: roots.disc });
    }
    let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
    Ok(lo.powf(roots.gamma_plus) * hi.powf(roots.gamma_minus) / (roots.gamma_plus - roots.gamma_minus))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenConfig {
    /// Largest link eigenvalue kept in the mode table.
    pub mu_cap: f64,
    /// Relative tail tolerance for each evaluation.
    pub tol: f64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self { mu_cap: 4000.0, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: f64,
    pub tail_bound: f64,
    pub mu_max: f64,
    pub modes_used: usize,
}

/// Truncated mode sum `G(x,y) = sum_k g_k(r_x, r_y) E_k(theta_x, theta_y)`.
#[derive(Debug, Clone)]
pub struct GreenEvaluator {
    pub cone: ConeSpec,
    pub op: OperatorSpec,
    pub config: GreenConfig,
    modes: Vec<IndicialRoots>,
    diag: Vec<f64>,
    kmax1: u32,
    kmax2: u32,
    /// Modes outside the table, grouped by `k1 + k2`, as
    /// `(mult / vol, sqrt(disc))`; `beyond_from` is the first shell index.
    beyond: Vec<Vec<(f64, f64)>>,
    beyond_from: u32,
}

const SHELL_LIMIT: u32 = 1500;
/// Shells past the first fully excluded one that are tabulated up front.
const PRECOMPUTED_SHELLS: u32 = 80;

impl GreenEvaluator {
    pub fn new(cone: ConeSpec, op: OperatorSpec, config: GreenConfig) -> Result<Self> {
        let vol = cone.link_volume();
        let mut modes = Vec::new();
        let mut diag = Vec::new();
        for m in enumerate_modes(&cone, config.mu_cap) {
            let roots = indicial_roots(&cone, &op, &m);
            if !roots.admits_green() {
                return Err(Error::Criticality { k1: m.k1, k2: m.k2, disc: roots.disc });
            }
            diag.push(m.mult as f64 / vol);
            modes.push(roots);
        }
        let kmax1 = modes.iter().map(|m| m.mode.k1).max().unwrap_or(0);
        let kmax2 = modes.iter().map(|m| m.mode.k2).max().unwrap_or(0);
        let mut ge = Self { cone, op, config, modes, diag, kmax1, kmax2, beyond: Vec::new(), beyond_from: 0 };
        let first_full = (0..=SHELL_LIMIT).find(|&k| ge.shell_fully_beyond(k)).unwrap_or(SHELL_LIMIT);
        ge.beyond_from = (0..=first_full).find(|&k| (0..=k).any(|k1| ge.excluded(k1, k - k1))).unwrap_or(first_full);
        let last = (first_full + PRECOMPUTED_SHELLS).min(SHELL_LIMIT);
        ge.beyond = (ge.beyond_from..=last).map(|k| ge.shell_modes(k)).collect::<Result<_>>()?;
        Ok(ge)
    }

    fn excluded(&self, k1: u32, k2: u32) -> bool {
        crate::spectrum::mode_eigenvalue(&self.cone, k1, k2) > self.config.mu_cap
    }

    fn shell_fully_beyond(&self, k: u32) -> bool {
        (0..=k).all(|k1| self.excluded(k1, k - k1))
    }

    fn shell_modes(&self, k: u32) -> Result<Vec<(f64, f64)>> {
        let vol = self.cone.link_volume();
        let mut out = Vec::new();
        for k1 in 0..=k {
            if !self.excluded(k1, k - k1) {
                continue;
            }
            let m = LinkMode::new(&self.cone, k1, k - k1);
            let roots = indicial_roots(&self.cone, &self.op, &m);
            if !roots.admits_green() {
                return Err(Error::Criticality { k1: m.k1, k2: m.k2, disc: roots.disc });
            }
            out.push((m.mult as f64 / vol, roots.disc.sqrt()));
        }
        Ok(out)
    }

    pub fn modes(&self) -> &[IndicialRoots] {
        &self.modes
    }

    /// `(r_< r_>)^{-(n-2)/2} rho^{sqrt(disc)} / (2 sqrt(disc))`, i.e. `g_k` in
    /// overflow-free form.
    fn radial_term(&self, roots: &IndicialRoots, log_prod: f64, log_ratio: f64) -> f64 {
        let s = roots.disc.sqrt();
        (-self.cone.half_dim() * log_prod + s * log_ratio).exp() / (2.0 * s)
    }

    /// Bound on all modes outside the table, summed shell by shell in
    /// `k1 + k2`. Once shells are fully excluded their ratios decrease, so
    /// the current ratio bounds a geometric remainder.
    fn beyond_table_bound(&self, log_prod: f64, log_ratio: f64) -> f64 {
        if log_ratio >= 0.0 {
            return f64::INFINITY;
        }
        let prefactor = -self.cone.half_dim() * log_prod;
        let shell_sum = |modes: &[(f64, f64)]| -> f64 {
            modes.iter().map(|(w, s)| w * (prefactor + s * log_ratio).exp() / (2.0 * s)).sum()
        };
        let mut total = 0.0;
        let mut prev_shell = f64::INFINITY;
        let mut prev_ratio = f64::INFINITY;
        for k in self.beyond_from..=SHELL_LIMIT {
            let idx = (k - self.beyond_from) as usize;
            let shell = match self.beyond.get(idx) {
                Some(modes) => shell_sum(modes),
                None => match self.shell_modes(k) {
                    Ok(modes) => shell_sum(&modes),
                    Err(_) => return f64::INFINITY,
                },
            };
            total += shell;
            if self.shell_fully_beyond(k) && k > self.beyond_from {
                if shell == 0.0 {
                    return total;
                }
                let ratio = shell / prev_shell;
                if ratio < 1.0 && ratio <= prev_ratio && shell <= 1e-3 * total {
                    return total + shell * ratio / (1.0 - ratio);
                }
                prev_ratio = ratio;
            }
            prev_shell = shell;
        }
        f64::INFINITY
    }

    fn check_pair(&self, x: &ConePoint, y: &ConePoint) -> Result<(f64, f64)> {
        if x == y {
            return Err(Error::InvalidInput("Green's function evaluated on the diagonal".into()));
        }
        let (lo, hi) = if x.r <= y.r { (x.r, y.r) } else { (y.r, x.r) };
        Ok(((lo * hi).ln(), (lo / hi).ln()))
    }

    /// Term values and per-term bounds, in table order.
    fn terms(&self, x: &ConePoint, y: &ConePoint, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let (log_prod, log_ratio) = self.check_pair(x, y)?;
        let (t1, t2) = x.theta.factor_cosines(&y.theta);
        let z1 = normalized_gegenbauer_table(self.kmax1, (self.cone.p as f64 - 1.0) / 2.0, t1);
        let z2 = normalized_gegenbauer_table(self.kmax2, (self.cone.q as f64 - 1.0) / 2.0, t2);
        let mut vals = Vec::with_capacity(count);
        let mut bounds = Vec::with_capacity(count);
        for (roots, d) in self.modes.iter().zip(&self.diag).take(count) {
            let b = d * self.radial_term(roots, log_prod, log_ratio);
            bounds.push(b);
            vals.push(b * z1[roots.mode.k1 as usize] * z2[roots.mode.k2 as usize]);
        }
        Ok((vals, bounds))
    }

    /// Evaluate with the smallest truncation whose certified tail is below
    /// `tol` times the partial sum.
    pub fn green(&self, x: &ConePoint, y: &ConePoint) -> Result<GreenValue> {
        let (log_prod, log_ratio) = self.check_pair(x, y)?;
        let (vals, bounds) = self.terms(x, y, self.modes.len())?;
        let beyond = self.beyond_table_bound(log_prod, log_ratio);
        let mut suffix = vec![0.0; bounds.len() + 1];
        suffix[bounds.len()] = beyond;
        for j in (0..bounds.len()).rev() {
            suffix[j] = suffix[j + 1] + bounds[j];
        }
        let mut partial = 0.0;
        for j in 0..vals.len() {
            partial += vals[j];
            let group_end = j + 1 == vals.len() || self.modes[j + 1].mode.mu > self.modes[j].mode.mu;
            if group_end && suffix[j + 1] <= self.config.tol * partial.abs() {
                return Ok(GreenValue {
                    value: partial,
                    tail_bound: suffix[j + 1],
                    mu_max: self.modes[j].mode.mu,
                    modes_used: j + 1,
                });
            }
        }
        Err(Error::TailNotConvergent { tail: beyond, limit: self.config.tol * partial.abs() })
    }

    /// Sum over all modes with `mu <= mu_max`, with the bound on the rest.
    pub fn green_truncated(&self, x: &ConePoint, y: &ConePoint, mu_max: f64) -> Result<GreenValue> {
        if mu_max > self.config.mu_cap {
            return Err(Error::InvalidInput(format!("mu_max {mu_max} exceeds table cap {}", self.config.mu_cap)));
        }
        let (log_prod, log_ratio) = self.check_pair(x, y)?;
        let count = self.modes.iter().take_while(|m| m.mode.mu <= mu_max).count();
        let (vals, bounds) = self.terms(x, y, self.modes.len())?;
        let tail = bounds[count..].iter().sum::<f64>() + self.beyond_table_bound(log_prod, log_ratio);
        Ok(GreenValue {
            value: vals[..count].iter().sum(),
            tail_bound: tail,
            mu_max,
            modes_used: count,
        })
    }

    /// Sum of the first `count` table modes, with no tail control.
    pub fn green_fixed(&self, x: &ConePoint, y: &ConePoint, count: usize) -> Result<f64> {
        Ok(self.terms(x, y, count)?.0.iter().sum())
    }
}

pub fn green(ge: &GreenEvaluator, x: &ConePoint, y: &ConePoint) -> Result<GreenValue> {
    ge.green(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual: f64,
    pub value: f64,
    pub modes_used: usize,
}

/// Orthonormal tangent vectors at the unit vector `u`.
fn tangent_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(u.len() - 1);
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()));
    for &k in &order {
        if basis.len() + 1 == u.len() {
            break;
        }
        let mut v = vec![0.0; u.len()];
        v[k] = 1.0;
        for w in std::iter::once(u).chain(basis.iter().map(|b| b.as_slice())) {
            let c: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            for (vi, wi) in v.iter_mut().zip(w) {
                *vi -= c * wi;
            }
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    basis
}

fn rotate(u: &[f64], e: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = angle.sin_cos();
    u.iter().zip(e).map(|(a, b)| c * a + s * b).collect()
}

/// Second-order finite-difference value of `L G(., y)` at `x`, using the
/// truncation selected at `x` for every stencil point.
pub fn harmonic_residual(ge: &GreenEvaluator, x: &ConePoint, y: &ConePoint, h: f64) -> Result<ResidualReport> {
    let c = &ge.cone;
    let center = ge.green(x, y)?;
    let count = center.modes_used;
    let f = |pt: &ConePoint| ge.green_fixed(pt, y, count);
    let f0 = f(x)?;
    let at_r = |r: f64| ConePoint { r, theta: x.theta.clone() };
    let fp = f(&at_r(x.r + h))?;
    let fm = f(&at_r(x.r - h))?;
    let f_rr = (fp - 2.0 * f0 + fm) / (h * h);
    let f_r = (fp - fm) / (2.0 * h);
    // link Laplacian: sum of second derivatives along orthonormal geodesics
    let mut lap_link = 0.0;
    for (factor, radius) in [(0usize, c.r1), (1usize, c.r2)] {
        let u = if factor == 0 { &x.theta.u1 } else { &x.theta.u2 };
        for e in tangent_basis(u) {
            let moved = |sign: f64| {
                let w = rotate(u, &e, sign * h / radius);
                let theta = if factor == 0 {
                    LinkPoint { u1: w, u2: x.theta.u2.clone() }
                } else {
                    LinkPoint { u1: x.theta.u1.clone(), u2: w }
                };
                ConePoint { r: x.r, theta }
            };
            lap_link += (f(&moved(1.0))? - 2.0 * f0 + f(&moved(-1.0))?) / (h * h);
        }
    }
    let r = x.r;
    let lap = f_rr + (c.dim() - 1.0) / r * f_r + lap_link / (r * r);
    let residual = -lap - ge.op.zeroth_order(c) / (r * r) * f0;
    Ok(ResidualReport { residual, value: f0, modes_used: count })
}

/// CSV rows `r_x, theta_x..., r_y, theta_y..., value, tail_bound`.
pub fn green_samples_csv(rows: &[(ConePoint, ConePoint, GreenValue)]) -> String {
    let mut out = String::new();
    if let Some((x, _, _)) = rows.first() {
        let coords = |tag: &str, n1: usize, n2: usize| {
            let mut cols = vec![format!("r_{tag}")];
            cols.extend((0..n1).map(|i| format!("{tag}_u1_{i}")));
            cols.extend((0..n2).map(|i| format!("{tag}_u2_{i}")));
            cols.join(",")
        };
        let (n1, n2) = (x.theta.u1.len(), x.theta.u2.len());
        out.push_str(&format!("{},{},value,tail_bound\n", coords("x", n1, n2), coords("y", n1, n2)));
    }
    let fmt_point = |p: &ConePoint| {
        std::iter::once(p.r)
            .chain(p.theta.u1.iter().copied())
            .chain(p.theta.u2.iter().copied())
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    for (x, y, g) in rows {
        out.push_str(&format!("{},{},{},{}\n", fmt_point(x), fmt_point(y), g.value, g.tail_bound));
    }
    out
}
