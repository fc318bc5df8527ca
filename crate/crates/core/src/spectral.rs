//! Spectral side of the operator family: Dirichlet eigenvalues of
//! `delta^2 L` on log-annuli, the criticality trichotomy, Hardy quotients
//! and weighted Sobolev norms with tip and far cutoffs.
//!
//! Everything radial is done in `t = log r`, where each link mode becomes a
//! constant-coefficient problem `(-v'' + V_k v) / a^2 = Lambda v` after
//! `u = r^{-(n-2)/2} v`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::ConeSpec;
use crate::quadrature::CompositeRule;
use crate::radial::{
    adaptedness_certificate, indicial_roots, mode_green, AdaptednessCertificate, OperatorSpec,
};
use crate::spectrum::{enumerate_modes, LinkMode};
use crate::{Error, Result};

/// Uniform grid on `[-T/2, T/2]` in `t = log r`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    #[serde(rename = "T")]
    pub t_len: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn new(t_len: f64, n: usize) -> Result<Self> {
        if !(t_len > 0.0 && t_len.is_finite()) || n < 16 {
            return Err(Error::InvalidInput(format!("log grid T={t_len}, N={n}")));
        }
        Ok(Self { t_len, n })
    }

    /// Grid with step close to `h`, forced odd so that `t = 0` is a node.
    pub fn with_step(t_len: f64, h: f64) -> Result<Self> {
        let mut n = ((t_len / h).ceil() as usize + 1).max(17);
        if n.is_multiple_of(2) {
            n += 1;
        }
        Self::new(t_len, n)
    }

    pub fn h(&self) -> f64 {
        self.t_len / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -0.5 * self.t_len + i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

/// Solve the symmetric constant-coefficient tridiagonal system with diagonal
/// `d` and off-diagonal `e` (Thomas algorithm).
pub fn solve_tridiagonal(d: f64, e: f64, rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    let mut c_prime = vec![0.0; m];
    let mut x = vec![0.0; m];
    let mut denom = d;
    c_prime[0] = e / denom;
    x[0] = rhs[0] / denom;
    for i in 1..m {
        denom = d - e * c_prime[i - 1];
        c_prime[i] = e / denom;
        x[i] = (rhs[i] - e * x[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletConfig {
    pub max_iter: usize,
    /// Relative change of the Rayleigh quotient between sweeps.
    pub eig_tol: f64,
    /// Sup-norm change of the normalized iterate.
    pub vec_tol: f64,
}

impl Default for DirichletConfig {
    fn default() -> Self {
        Self { max_iter: 500, eig_tol: 1e-14, vec_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletEigen {
    pub grid: LogGrid,
    pub mode: LinkMode,
    pub lambda: f64,
    /// `(V_k + (pi/T)^2) / a^2`.
    pub closed_form: f64,
    pub t: Vec<f64>,
    /// `v(t)`, positive, with `v(0) = 1`.
    pub v: Vec<f64>,
    pub iterations: usize,
    half_dim: f64,
}

impl DirichletEigen {
    /// Samples `(r, u)` of `u = r^{-(n-2)/2} v(log r)`.
    pub fn radial_profile(&self) -> Vec<(f64, f64)> {
        self.t
            .iter()
            .zip(&self.v)
            .map(|(&t, &v)| (t.exp(), (-self.half_dim * t).exp() * v))
            .collect()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("t,v\n");
        for (t, v) in self.t.iter().zip(&self.v) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }
}

/// Mode potential with the shift removed: `((n-2)/2)^2 + mu_k - c_A kappa`.
fn unshifted_potential(c: &ConeSpec, op: &OperatorSpec, mode: &LinkMode) -> f64 {
    let h = c.half_dim();
    h * h + mode.mu - op.c_a * c.kappa
}

/// First Dirichlet eigenpair of `delta^2 L` (without the lambda shift) for
/// one mode on the annulus described by `grid`.
pub fn dirichlet_eigen(
    c: &ConeSpec,
    op: &OperatorSpec,
    grid: &LogGrid,
    mode: &LinkMode,
    cfg: &DirichletConfig,
) -> Result<DirichletEigen> {
    let a2 = c.a * c.a;
    let v_k = unshifted_potential(c, op, mode);
    let h = grid.h();
    let m = grid.n - 2;
    // A - sigma with sigma = V_k / a^2, a lower bound of the spectrum
    let d = 2.0 / (h * h * a2);
    let e = -1.0 / (h * h * a2);
    let rayleigh = |x: &[f64]| {
        let mut grad = x[0] * x[0] + x[m - 1] * x[m - 1];
        for w in x.windows(2) {
            grad += (w[1] - w[0]) * (w[1] - w[0]);
        }
        let mass: f64 = x.iter().map(|v| v * v).sum();
        v_k / a2 + grad / (h * h * a2 * mass)
    };
    let mut x = vec![1.0; m];
    let mut lambda = rayleigh(&x);
    for it in 1..=cfg.max_iter {
        let mut y = solve_tridiagonal(d, e, &x);
        let sup = y.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        y.iter_mut().for_each(|v| *v /= sup);
        let change = x.iter().zip(&y).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
        let next = rayleigh(&y);
        let eig_change = (next - lambda).abs() / next.abs().max(f64::MIN_POSITIVE);
        x = y;
        lambda = next;
        if eig_change < cfg.eig_tol && change < cfg.vec_tol {
            let mut v = Vec::with_capacity(grid.n);
            v.push(0.0);
            v.extend_from_slice(&x);
            v.push(0.0);
            let t = grid.nodes();
            let v0 = value_at_zero(&t, &v);
            v.iter_mut().for_each(|s| *s /= v0);
            if v[1..grid.n - 1].iter().any(|s| *s <= 0.0) {
                return Err(Error::CheckFailed("first Dirichlet eigenvector changes sign".into()));
            }
            return Ok(DirichletEigen {
                grid: *grid,
                mode: *mode,
                lambda,
                closed_form: (v_k + (PI / grid.t_len).powi(2)) / a2,
                t,
                v,
                iterations: it,
                half_dim: c.half_dim(),
            });
        }
    }
    Err(Error::NonConvergence { iterations: cfg.max_iter })
}

/// Quadratic interpolation at `t = 0` through the three nearest nodes.
fn value_at_zero(t: &[f64], v: &[f64]) -> f64 {
    let i = t
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
        .clamp(1, t.len() - 2);
    let (x0, x1, x2) = (t[i - 1], t[i], t[i + 1]);
    let l0 = (0.0 - x1) * (0.0 - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (0.0 - x0) * (0.0 - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (0.0 - x0) * (0.0 - x1) / ((x2 - x0) * (x2 - x1));
    l0 * v[i - 1] + l1 * v[i] + l2 * v[i + 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    #[serde(rename = "T")]
    pub t_len: f64,
    pub lambda: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    #[serde(rename = "T")]
    pub t_len: f64,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Positive Green's function exists: mode-0 roots and a sample value.
    GreenWitness {
        adaptedness: AdaptednessCertificate,
        gamma_plus: f64,
        gamma_minus: f64,
        mode0_green_1_2: f64,
    },
    /// Ground state `r^{-(n-2)/2}`, limit of Dirichlet eigenfunctions.
    GroundState {
        exponent: f64,
        window: (f64, f64),
        convergence: Vec<ConvergenceEntry>,
        green_refused: bool,
    },
    /// Annulus whose first Dirichlet eigenvalue does not exceed the query.
    EigenvalueDrop {
        #[serde(rename = "T")]
        t_len: f64,
        dirichlet_lambda: f64,
        closed_form: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub lambda_star: f64,
    pub lambda_query: f64,
    pub regime: Regime,
    pub sequence: Vec<SequenceEntry>,
    /// Richardson extrapolation of the last two entries, assuming a `T^{-2}`
    /// approach.
    pub extrapolated: f64,
    pub ground_state_profile: Vec<(f64, f64)>,
    pub witness: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityConfig {
    pub schedule: Vec<f64>,
    /// Target step in `t`.
    pub h: f64,
    /// Relative band around `lambda*` reported as critical.
    pub band: f64,
    pub dirichlet: DirichletConfig,
    /// Windows used for the ground-state convergence trace.
    pub ground_state_schedule: Vec<f64>,
    pub window: (f64, f64),
}

impl Default for CriticalityConfig {
    fn default() -> Self {
        Self {
            schedule: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            h: 1e-2,
            band: 1e-9,
            dirichlet: DirichletConfig::default(),
            ground_state_schedule: vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
            window: (0.5, 2.0),
        }
    }
}

/// Regime of `L - lambda <A>^2` from the sign of `lambda - lambda*`.
pub fn classify(c: &ConeSpec, op0: &OperatorSpec, lambda: f64, band: f64) -> Regime {
    let ls = op0.lambda_star(c);
    if (lambda - ls).abs() <= band * ls.abs().max(f64::MIN_POSITIVE) {
        Regime::Critical
    } else if lambda < ls {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

/// Dirichlet eigenvalues of `delta^2 L` over a schedule of annuli.
pub fn dirichlet_sequence(
    c: &ConeSpec,
    op0: &OperatorSpec,
    cfg: &CriticalityConfig,
) -> Result<Vec<SequenceEntry>> {
    if cfg.schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("schedule must be strictly increasing".into()));
    }
    // the infimum over modes sits at mode 0 because V_k grows with mu_k
    let v0 = unshifted_potential(c, op0, &LinkMode::zero());
    if enumerate_modes(c, 200.0).iter().any(|m| unshifted_potential(c, op0, m) < v0) {
        return Err(Error::CheckFailed("a nonconstant mode has smaller potential".into()));
    }
    let mut out: Vec<SequenceEntry> = Vec::with_capacity(cfg.schedule.len());
    for &t_len in &cfg.schedule {
        let grid = LogGrid::with_step(t_len, cfg.h)?;
        let eig = dirichlet_eigen(c, op0, &grid, &LinkMode::zero(), &cfg.dirichlet)?;
        if let Some(prev) = out.last() {
            if !(eig.lambda < prev.lambda) {
                return Err(Error::MonotonicityViolation { t: t_len, previous: prev.lambda, current: eig.lambda });
            }
        }
        out.push(SequenceEntry { t_len, lambda: eig.lambda, closed_form: eig.closed_form });
    }
    Ok(out)
}

fn extrapolate(seq: &[SequenceEntry]) -> f64 {
    match seq {
        [.., a, b] => {
            let (ta, tb) = (a.t_len * a.t_len, b.t_len * b.t_len);
            (tb * b.lambda - ta * a.lambda) / (tb - ta)
        }
        [a] => a.lambda,
        [] => f64::NAN,
    }
}

/// Sup over `r` in `window` of `|r^{-(n-2)/2} (v_T(log r) - 1)|` at grid nodes.
fn ground_state_distance(eig: &DirichletEigen, window: (f64, f64)) -> f64 {
    let (lo, hi) = (window.0.ln(), window.1.ln());
    eig.t
        .iter()
        .zip(&eig.v)
        .filter(|(t, _)| **t >= lo - 1e-12 && **t <= hi + 1e-12)
        .map(|(t, v)| ((-eig.half_dim * t).exp() * (v - 1.0)).abs())
        .fold(0.0, f64::max)
}

/// Full trichotomy for `L - lambda_query <A>^2`, with the certificate that
/// matches the regime.
pub fn trichotomy(
    c: &ConeSpec,
    op0: &OperatorSpec,
    lambda_query: f64,
    cfg: &CriticalityConfig,
) -> Result<CriticalityReport> {
    if op0.lambda != 0.0 {
        return Err(Error::InvalidInput("trichotomy expects the unshifted operator".into()));
    }
    let lambda_star = op0.lambda_star(c);
    let sequence = dirichlet_sequence(c, op0, cfg)?;
    if let Some(bad) = sequence.iter().find(|s| s.lambda <= lambda_star) {
        return Err(Error::CheckFailed(format!("Dirichlet value {} at T={} is not above lambda*", bad.lambda, bad.t_len)));
    }
    let regime = classify(c, op0, lambda_query, cfg.band);
    let h = c.half_dim();
    let ground_state_profile: Vec<(f64, f64)> =
        (0..=40).map(|i| 2f64.powf(-2.0 + 0.1 * i as f64)).map(|r| (r, r.powf(-h))).collect();
    let shifted = op0.with_lambda(lambda_query);
    let witness = match regime {
        Regime::Subcritical => {
            let roots = indicial_roots(c, &shifted, &LinkMode::zero());
            Certificate::GreenWitness {
                adaptedness: adaptedness_certificate(c, &shifted),
                gamma_plus: roots.gamma_plus,
                gamma_minus: roots.gamma_minus,
                mode0_green_1_2: mode_green(&roots, 1.0, 2.0)?,
            }
        }
        Regime::Critical => {
            let at_star = op0.with_lambda(lambda_star);
            let roots = indicial_roots(c, &at_star, &LinkMode::zero());
            let mut convergence = Vec::new();
            for &t_len in &cfg.ground_state_schedule {
                let grid = LogGrid::with_step(t_len, cfg.h)?;
                let eig = dirichlet_eigen(c, op0, &grid, &LinkMode::zero(), &cfg.dirichlet)?;
                convergence.push(ConvergenceEntry { t_len, sup_distance: ground_state_distance(&eig, cfg.window) });
            }
            Certificate::GroundState {
                exponent: -h,
                window: cfg.window,
                convergence,
                green_refused: mode_green(&roots, 1.0, 2.0).is_err(),
            }
        }
        Regime::Supercritical => {
            let a2 = c.a * c.a;
            let v0 = unshifted_potential(c, op0, &LinkMode::zero());
            let t_len = PI / (lambda_query * a2 - v0).sqrt();
            let grid = LogGrid::with_step(t_len, cfg.h.min(t_len / 64.0))?;
            let eig = dirichlet_eigen(c, op0, &grid, &LinkMode::zero(), &cfg.dirichlet)?;
            Certificate::EigenvalueDrop { t_len, dirichlet_lambda: eig.lambda, closed_form: eig.closed_form }
        }
    };
    Ok(CriticalityReport {
        lambda_star,
        lambda_query,
        regime,
        extrapolated: extrapolate(&sequence),
        sequence,
        ground_state_profile,
        witness,
    })
}

/// Dirichlet sequence and classification of `op.lambda`.
pub fn principal_eigenvalue(c: &ConeSpec, op: &OperatorSpec, cfg: &CriticalityConfig) -> Result<CriticalityReport> {
    trichotomy(c, &op.with_lambda(0.0), op.lambda, cfg)
}

/// Radial profiles, described through `B(t) = b(e^t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `r^beta psi((log r - center)/width)` with `psi(s) = exp(-1/(1-s^2))`.
    LogBump { beta: f64, center: f64, width: f64 },
    /// `r^beta_tip` near the tip, `~ r^beta_far` at infinity, optionally
    /// multiplied by a far cutoff that vanishes beyond `2 taper`.
    Power { beta_tip: f64, beta_far: f64, knee: f64, taper: Option<f64> },
}

fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let g = 1.0 - s * s;
    let psi = (-1.0 / g).exp();
    (psi, psi * (-2.0 * s / (g * g)))
}

/// Decreasing quintic step: 1 on `(-inf, 0]`, 0 on `[1, inf)`.
pub fn cutoff_psi(s: f64) -> (f64, f64) {
    if s <= 0.0 {
        (1.0, 0.0)
    } else if s >= 1.0 {
        (0.0, 0.0)
    } else {
        let s2 = s * s;
        let step = s2 * s * (10.0 - 15.0 * s + 6.0 * s2);
        let dstep = 30.0 * s2 * (1.0 - s) * (1.0 - s);
        (1.0 - step, -dstep)
    }
}

/// `sup |psi'|` of the quintic step.
pub const CUTOFF_SLOPE: f64 = 15.0 / 8.0;

impl RadialProfile {
    /// `(B(t), B'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        self.eval_scaled(t, 0.0)
    }

    /// `(B(t) e^{gamma t}, B'(t) e^{gamma t})`, with the exponentials merged so
    /// that far tails neither overflow nor underflow early.
    pub fn eval_scaled(&self, t: f64, gamma: f64) -> (f64, f64) {
        match *self {
            RadialProfile::LogBump { beta, center, width } => {
                let (p, dp) = bump((t - center) / width);
                let e = ((beta + gamma) * t).exp();
                (e * p, e * (beta * p + dp / width))
            }
            RadialProfile::Power { beta_tip, beta_far, knee, taper } => {
                let delta = beta_tip - beta_far;
                let x = delta * (t - knee.ln());
                // 1/(1+e^x) and e^x/(1+e^x) without overflow
                let (base, frac) = if x > 0.0 {
                    let e = (-x).exp();
                    (((beta_tip + gamma) * t - x).exp() / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = x.exp();
                    (((beta_tip + gamma) * t).exp() / (1.0 + e), e / (1.0 + e))
                };
                let dbase = base * (beta_tip - delta * frac);
                match taper {
                    None => (base, dbase),
                    Some(rt) => {
                        let r = t.exp();
                        let (chi, dchi) = cutoff_psi(r / rt - 1.0);
                        (base * chi, dbase * chi + base * dchi * r / rt)
                    }
                }
            }
        }
    }

    /// Log-radius interval outside which the profile vanishes or follows a
    /// pure power, together with the decay rates needed for tails.
    fn support(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            RadialProfile::LogBump { center, width, .. } => (Some(center - width), Some(center + width)),
            RadialProfile::Power { taper, .. } => (None, taper.map(|rt| (2.0 * rt).ln())),
        }
    }
}

/// Function `sum_k c_k b(r) phi_k(theta)` with `L^2`-normalized link
/// eigenfunctions sharing one radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFunction {
    pub terms: Vec<(LinkMode, f64)>,
    pub profile: RadialProfile,
}

/// Multiplicative cutoff applied before taking norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cut {
    None,
    /// `psi[eta] = psi(delta/eta - 1)`, supported where `delta <= 2 eta`.
    Tip { eta: f64 },
    /// `1 - psi_R` with `psi_R = psi(r/R - 1)`, supported where `r >= R`.
    Far { radius: f64 },
}

/// The radial integrals `D = int B'^2 e^{(n-2)t} dt` and `M = int B^2 e^{(n-2)t} dt`
/// of a cut profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialIntegrals {
    pub grad: f64,
    pub mass: f64,
}

/// Weighted `L^2` and `H^{1,2}` norms on the cone for functions of the form
/// `ModeFunction`.
#[derive(Debug, Clone)]
pub struct SobolevForm {
    pub cone: ConeSpec,
    pub op: OperatorSpec,
    pub rule: CompositeRule,
}

/// Decay in `t` below which the tails are summed in closed form.
const TAIL_SPAN: f64 = 40.0;

impl SobolevForm {
    pub fn new(cone: ConeSpec, op: OperatorSpec) -> Self {
        Self { cone, op, rule: CompositeRule::default() }
    }

    fn cut_factor(&self, cut: Cut, t: f64) -> (f64, f64) {
        match cut {
            Cut::None => (1.0, 0.0),
            Cut::Tip { eta } => {
                let scale = eta * self.cone.a;
                let r = t.exp();
                let (p, dp) = cutoff_psi(r / scale - 1.0);
                (p, dp * r / scale)
            }
            Cut::Far { radius } => {
                let r = t.exp();
                let (p, dp) = cutoff_psi(r / radius - 1.0);
                (1.0 - p, -dp * r / radius)
            }
        }
    }

    pub fn radial_integrals(&self, profile: &RadialProfile, cut: Cut) -> Result<RadialIntegrals> {
        let n2 = self.cone.dim() - 2.0;
        let (mut lo, mut hi) = profile.support();
        match cut {
            Cut::Tip { eta } => {
                let t = (2.0 * eta * self.cone.a).ln();
                hi = Some(hi.map_or(t, |h| h.min(t)));
            }
            Cut::Far { radius } => {
                let t = radius.ln();
                lo = Some(lo.map_or(t, |l| l.max(t)));
            }
            Cut::None => {}
        }
        // exponents of the integrand e^{alpha t} at the two ends
        let (alpha_tip, alpha_far) = match *profile {
            RadialProfile::Power { beta_tip, beta_far, .. } => (2.0 * beta_tip + n2, 2.0 * beta_far + n2),
            RadialProfile::LogBump { .. } => (1.0, -1.0),
        };
        if lo.is_none() && alpha_tip <= 0.0 {
            return Err(Error::DivergentNorm(format!("profile behaves like r^{} at the tip", 0.5 * (alpha_tip - n2))));
        }
        if hi.is_none() && alpha_far >= 0.0 {
            return Err(Error::DivergentNorm(format!("profile behaves like r^{} at infinity", 0.5 * (alpha_far - n2))));
        }
        if let (Some(l), Some(h)) = (lo, hi) {
            if l >= h {
                return Ok(RadialIntegrals { grad: 0.0, mass: 0.0 });
            }
        }
        let knee = match *profile {
            RadialProfile::Power { knee, .. } => knee.ln(),
            RadialProfile::LogBump { center, .. } => center,
        };
        let t_lo = lo.unwrap_or(knee.min(hi.unwrap_or(knee)) - TAIL_SPAN / alpha_tip);
        let t_hi = hi.unwrap_or(knee.max(t_lo) + TAIL_SPAN / -alpha_far);
        let integrand = |t: f64| {
            let (b, db) = profile.eval_scaled(t, 0.5 * n2);
            let (chi, dchi) = self.cut_factor(cut, t);
            let f = chi * b;
            let df = dchi * b + chi * db;
            (df * df, f * f)
        };
        // split at the places where the cutoffs switch on and off
        let mut breaks = vec![t_lo, t_hi];
        let mut add = |x: f64| {
            if x > t_lo && x < t_hi {
                breaks.push(x);
            }
        };
        match cut {
            Cut::Tip { eta } => add((eta * self.cone.a).ln()),
            Cut::Far { radius } => add((2.0 * radius).ln()),
            Cut::None => {}
        }
        if let RadialProfile::Power { taper: Some(rt), .. } = *profile {
            add(rt.ln());
        }
        add(knee);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut grad = 0.0;
        let mut mass = 0.0;
        for w in breaks.windows(2) {
            grad += self.rule.integrate(w[0], w[1], |t| integrand(t).0)?;
            mass += self.rule.integrate(w[0], w[1], |t| integrand(t).1)?;
        }
        // closed-form tails for the pure-power ends
        if lo.is_none() {
            let (g, m) = integrand(t_lo);
            grad += g / alpha_tip;
            mass += m / alpha_tip;
        }
        if hi.is_none() {
            let (g, m) = integrand(t_hi);
            grad += g / -alpha_far;
            mass += m / -alpha_far;
        }
        Ok(RadialIntegrals { grad, mass })
    }

    fn weights(f: &ModeFunction) -> Result<Vec<(f64, f64)>> {
        if f.terms.is_empty() {
            return Err(Error::InvalidInput("mode function without terms".into()));
        }
        Ok(f.terms.iter().map(|(m, c)| (m.mu, c * c)).collect())
    }

    /// `|f|^2_{L^2_<A>} = int <A>^2 f^2`.
    pub fn l2_norm(&self, f: &ModeFunction, cut: Cut) -> Result<f64> {
        let ri = self.radial_integrals(&f.profile, cut)?;
        let total: f64 = Self::weights(f)?.iter().map(|(_, c2)| c2).sum();
        Ok((total * self.cone.a * self.cone.a * ri.mass).sqrt())
    }

    /// `|f|^2_{H^{1,2}_<A>} = int |grad f|^2 + <A>^2 f^2`.
    pub fn h_norm(&self, f: &ModeFunction, cut: Cut) -> Result<f64> {
        let ri = self.radial_integrals(&f.profile, cut)?;
        let a2 = self.cone.a * self.cone.a;
        let sum: f64 = Self::weights(f)?.iter().map(|(mu, c2)| c2 * (ri.grad + (mu + a2) * ri.mass)).sum();
        Ok(sum.sqrt())
    }

    /// `int f L f / int <A>^2 f^2` for the shifted operator.
    pub fn rayleigh_quotient(&self, f: &ModeFunction) -> Result<f64> {
        let ri = self.radial_integrals(&f.profile, Cut::None)?;
        let a2 = self.cone.a * self.cone.a;
        let w0 = self.op.zeroth_order(&self.cone);
        let w = Self::weights(f)?;
        let num: f64 = w.iter().map(|(mu, c2)| c2 * (ri.grad + (mu - w0) * ri.mass)).sum();
        let den: f64 = w.iter().map(|(_, c2)| c2 * a2 * ri.mass).sum();
        Ok(num / den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardySampler {
    pub count: usize,
    pub seed: u64,
    pub mu_max: f64,
    pub max_terms: usize,
}

impl Default for HardySampler {
    fn default() -> Self {
        Self { count: 200, seed: 7, mu_max: 60.0, max_terms: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WideningEntry {
    pub t0: f64,
    pub quotient: f64,
    pub relative_gap: f64,
    /// Dirichlet value on the support `[-T0, T0]`, a lower bound.
    pub dirichlet_support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    /// `lambda* - lambda` for the queried operator.
    pub bound: f64,
    pub samples: usize,
    pub min_quotient: f64,
    pub widening: Vec<WideningEntry>,
}

/// Hardy quotient of a centred log-bump on `[-t0, t0]` in the given mode,
/// with profile exponent `-(n-2)/2`.
pub fn bump_quotient(form: &SobolevForm, mode: LinkMode, t0: f64) -> Result<f64> {
    let f = ModeFunction {
        terms: vec![(mode, 1.0)],
        profile: RadialProfile::LogBump { beta: -form.cone.half_dim(), center: 0.0, width: t0 },
    };
    form.rayleigh_quotient(&f)
}

pub fn hardy_check(c: &ConeSpec, op: &OperatorSpec, sampler: &HardySampler, widths: &[f64]) -> Result<HardyReport> {
    let form = SobolevForm::new(*c, *op);
    let bound = op.lambda_star(c) - op.lambda;
    let modes = enumerate_modes(c, sampler.mu_max);
    let mut rng = crate::seeded_rng(sampler.seed);
    let mut min_quotient = f64::INFINITY;
    for _ in 0..sampler.count {
        let k = rng.random_range(1..=sampler.max_terms.max(1));
        let terms: Vec<(LinkMode, f64)> =
            (0..k).map(|_| (modes[rng.random_range(0..modes.len())], rng.random_range(-1.0..1.0))).collect();
        let profile = RadialProfile::LogBump {
            beta: rng.random_range(-5.0..2.0),
            center: rng.random_range(-3.0..3.0),
            width: rng.random_range(0.3..6.0),
        };
        let q = form.rayleigh_quotient(&ModeFunction { terms, profile })?;
        if q < bound - 1e-9 {
            return Err(Error::CheckFailed(format!("Hardy quotient {q} below {bound}")));
        }
        min_quotient = min_quotient.min(q);
    }
    let a2 = c.a * c.a;
    let v0 = unshifted_potential(c, &op.with_lambda(0.0), &LinkMode::zero());
    let mut widening = Vec::new();
    for &t0 in widths {
        let q = bump_quotient(&form, LinkMode::zero(), t0)?;
        if q < bound - 1e-9 {
            return Err(Error::CheckFailed(format!("Hardy quotient {q} below {bound}")));
        }
        min_quotient = min_quotient.min(q);
        widening.push(WideningEntry {
            t0,
            quotient: q,
            relative_gap: (q - bound) / bound.abs(),
            dirichlet_support: (v0 + (PI / (2.0 * t0)).powi(2)) / a2 - op.lambda,
        });
    }
    Ok(HardyReport { bound, samples: sampler.count + widths.len(), min_quotient, widening })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffEntry {
    pub parameter: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub full_norm: f64,
    pub tip: Vec<CutoffEntry>,
    pub far: Vec<CutoffEntry>,
    /// `c(psi)` in `|grad psi[eta]| <= c(psi) <A>`.
    pub c_psi: f64,
    /// `c*` in `|grad psi_R| <= c*/R`.
    pub c_far: f64,
    pub gradient_samples: usize,
    pub max_gradient_ratio: f64,
    pub support_violations: usize,
}

/// Norms of `psi[eta] f` and `(1 - psi_R) f` and the pointwise gradient
/// bounds for both cutoffs.
pub fn cutoff_convergence(
    form: &SobolevForm,
    f: &ModeFunction,
    etas: &[f64],
    radii: &[f64],
    gradient_samples: usize,
    seed: u64,
) -> Result<CutoffReport> {
    let c = &form.cone;
    let full_norm = form.h_norm(f, Cut::None)?;
    let collect = |params: &[f64], cut: &dyn Fn(f64) -> Cut| -> Result<Vec<CutoffEntry>> {
        params.iter().map(|&p| Ok(CutoffEntry { parameter: p, norm: form.h_norm(f, cut(p))? })).collect()
    };
    let tip = collect(etas, &|eta| Cut::Tip { eta })?;
    let far = collect(radii, &|radius| Cut::Far { radius })?;
    for list in [&tip, &far] {
        for w in list.windows(2) {
            if w[1].norm > w[0].norm * (1.0 + 1e-9) {
                return Err(Error::CheckFailed(format!("cutoff norm increased at parameter {}", w[1].parameter)));
            }
        }
    }
    let c_psi = 2.0 * CUTOFF_SLOPE / c.a;
    let c_far = CUTOFF_SLOPE;
    let st = c.s_transform();
    let mut rng = crate::seeded_rng(seed);
    let mut max_ratio: f64 = 0.0;
    let mut support_violations = 0;
    for i in 0..gradient_samples {
        let scale = if i % 2 == 0 { etas.first().copied().unwrap_or(0.25) * c.a } else { radii.first().copied().unwrap_or(4.0) };
        let r = scale * rng.random_range(-2.0f64..2.5).exp();
        if i % 2 == 0 {
            let eta = scale / c.a;
            let s = st.delta(r) / eta - 1.0;
            let (value, slope) = cutoff_psi(s);
            // |grad psi[eta]| = |psi'| |grad delta| / eta with |grad delta| = 1/a
            let grad = slope.abs() / (eta * c.a);
            max_ratio = max_ratio.max(grad / (c_psi * st.value(r)));
            let delta = st.delta(r);
            if (delta <= eta && value != 1.0) || (delta >= 2.0 * eta && value != 0.0) || (!(eta..2.0 * eta).contains(&delta) && grad != 0.0) {
                support_violations += 1;
            }
        } else {
            let radius = scale;
            let (_, slope) = cutoff_psi(r / radius - 1.0);
            let grad = slope.abs() / radius;
            max_ratio = max_ratio.max(grad / (c_far / radius));
            if !(radius..2.0 * radius).contains(&r) && grad != 0.0 {
                support_violations += 1;
            }
        }
    }
    Ok(CutoffReport {
        full_norm,
        tip,
        far,
        c_psi,
        c_far,
        gradient_samples,
        max_gradient_ratio: max_ratio,
        support_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_cone;
    use proptest::prelude::*;

    fn simons_jacobi() -> (ConeSpec, OperatorSpec) {
        (ConeSpec::simons(), OperatorSpec::jacobi())
    }

    #[test]
    fn tridiagonal_matches_dense_product() {
        let rhs = [1.0, -2.0, 0.5, 3.0, 0.0];
        let (d, e) = (2.5, -1.0);
        let x = solve_tridiagonal(d, e, &rhs);
        for i in 0..rhs.len() {
            let mut ax = d * x[i];
            if i > 0 {
                ax += e * x[i - 1];
            }
            if i + 1 < rhs.len() {
                ax += e * x[i + 1];
            }
            assert!((ax - rhs[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn log_grid_invariants() {
        assert!(LogGrid::new(2.0, 15).is_err());
        let g = LogGrid::new(3.0, 31).unwrap();
        assert!((g.h() * 30.0 - 3.0).abs() < 1e-15);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!((g.node(15)).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_t2_example_and_eigenvector_shape() {
        let (c, op) = simons_jacobi();
        let grid = LogGrid::with_step(2.0, 1e-3).unwrap();
        let eig = dirichlet_eigen(&c, &op, &grid, &LinkMode::zero(), &DirichletConfig::default()).unwrap();
        let exact = (1.0 + PI * PI) / 24.0;
        assert!((eig.closed_form - exact).abs() < 1e-15);
        assert!((eig.lambda - exact).abs() < 1e-6);
        let mut worst: f64 = 0.0;
        for ((r, u), t) in eig.radial_profile().iter().zip(&eig.t) {
            let oracle = (PI * t / 2.0).cos() * r.powf(-2.5);
            worst = worst.max((u - oracle).abs());
        }
        assert!(worst < 1e-6, "sup error {worst}");
    }

    #[test]
    fn dirichlet_error_is_second_order() {
        let (c, op) = simons_jacobi();
        let err = |n: usize| {
            let grid = LogGrid::new(2.0, n).unwrap();
            let e = dirichlet_eigen(&c, &op, &grid, &LinkMode::zero(), &DirichletConfig::default()).unwrap();
            (e.lambda - e.closed_form).abs()
        };
        let (e1, e2, e3) = (err(21), err(41), err(81));
        for ratio in [e1 / e2, e2 / e3] {
            assert!((2.0..8.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn schedule_sequence_and_gap() {
        let (c, op) = simons_jacobi();
        let cfg = CriticalityConfig::default();
        let rep = principal_eigenvalue(&c, &op, &cfg).unwrap();
        assert_eq!(rep.regime, Regime::Subcritical);
        for s in &rep.sequence {
            let gap = s.lambda - 1.0 / 24.0;
            let predicted = (PI / s.t_len).powi(2) / 6.0;
            assert!((gap / predicted - 1.0).abs() < 0.02);
        }
        assert!((rep.extrapolated - 1.0 / 24.0).abs() < 1e-6);
        let lap = principal_eigenvalue(&c, &OperatorSpec::laplace(), &cfg).unwrap();
        assert!((lap.lambda_star - 25.0 / 24.0).abs() < 1e-15);
        let c24 = make_cone(2, 4, None).unwrap();
        assert!((OperatorSpec::jacobi().lambda_star(&c24) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn decreasing_schedule_is_rejected() {
        let (c, op) = simons_jacobi();
        let cfg = CriticalityConfig { schedule: vec![4.0, 2.0], ..Default::default() };
        assert!(principal_eigenvalue(&c, &op, &cfg).is_err());
    }

    #[test]
    fn trichotomy_examples() {
        let (c, op) = simons_jacobi();
        let cfg = CriticalityConfig::default();
        let sub = trichotomy(&c, &op, 0.0, &cfg).unwrap();
        match sub.witness {
            Certificate::GreenWitness { gamma_plus, gamma_minus, .. } => {
                assert!((gamma_plus + 2.0).abs() < 1e-12 && (gamma_minus + 3.0).abs() < 1e-12);
            }
            ref w => panic!("unexpected witness {w:?}"),
        }
        let crit = trichotomy(&c, &op, 1.0 / 24.0, &cfg).unwrap();
        match &crit.witness {
            Certificate::GroundState { exponent, convergence, green_refused, .. } => {
                assert_eq!(*exponent, -2.5);
                assert!(green_refused);
                assert!(convergence.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance));
                assert!(convergence.last().unwrap().sup_distance < 1e-3);
            }
            w => panic!("unexpected witness {w:?}"),
        }
        let sup = trichotomy(&c, &op, 1.0 / 12.0, &cfg).unwrap();
        match sup.witness {
            Certificate::EigenvalueDrop { t_len, dirichlet_lambda, .. } => {
                assert!((t_len - 2.0 * PI).abs() < 1e-12);
                assert!(dirichlet_lambda <= 1.0 / 12.0);
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn hardy_examples() {
        let (c, op) = simons_jacobi();
        let form = SobolevForm::new(c, op);
        let q = bump_quotient(&form, LinkMode::zero(), 2.0).unwrap();
        let lambda2 = (1.0 + PI * PI) / 24.0;
        let lambda4 = (0.25 + (PI / 4.0).powi(2)) / 6.0;
        assert!(q >= 1.0 / 24.0 && q <= lambda2, "{q}");
        assert!(q >= lambda4, "{q} vs Rayleigh-Ritz bound {lambda4}");
        let q10 = bump_quotient(&form, LinkMode::new(&c, 1, 0), 2.0).unwrap();
        assert!(q10 >= 25.0 / 24.0);
        let rep = hardy_check(&c, &op, &HardySampler::default(), &[4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!(rep.min_quotient >= 1.0 / 24.0 - 1e-9);
        assert!(rep.widening.windows(2).all(|w| w[1].quotient < w[0].quotient));
        assert!(rep.widening.last().unwrap().relative_gap < 0.05);
    }

    /// The bump quotient from an independent trapezoid rule in `t`.
    #[test]
    fn bump_quotient_matches_log_coordinate_oracle() {
        let (c, op) = simons_jacobi();
        let form = SobolevForm::new(c, op);
        let t0 = 3.0;
        let n = 200_000;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 1..n {
            let s = -1.0 + 2.0 * i as f64 / n as f64;
            let (p, dp) = bump(s);
            let dv = dp / t0;
            num += dv * dv + 0.25 * p * p;
            den += 6.0 * p * p;
        }
        let q = bump_quotient(&form, LinkMode::zero(), t0).unwrap();
        assert!((q - num / den).abs() < 1e-8);
    }

    fn tapered() -> ModeFunction {
        ModeFunction {
            terms: vec![(LinkMode::zero(), 1.0), (LinkMode::new(&ConeSpec::simons(), 1, 1), 0.5)],
            profile: RadialProfile::Power { beta_tip: -2.0, beta_far: -4.0, knee: 1.0, taper: Some(50.0) },
        }
    }

    #[test]
    fn cutoff_norms_decrease() {
        let (c, op) = simons_jacobi();
        let form = SobolevForm::new(c, op);
        let rep = cutoff_convergence(&form, &tapered(), &[0.25, 0.125, 0.0625], &[2.0, 4.0, 8.0, 16.0], 1000, 3).unwrap();
        assert!(rep.tip.windows(2).all(|w| w[1].norm < w[0].norm));
        assert!(rep.far.windows(2).all(|w| w[1].norm < w[0].norm));
        assert!(rep.max_gradient_ratio <= 1.0 + 1e-12);
        assert_eq!(rep.support_violations, 0);
        assert!(rep.tip[0].norm < rep.full_norm);
    }

    /// Same norms with a coarser fixed-cell rule: the two resolutions agree.
    #[test]
    fn cutoff_norms_are_resolution_independent() {
        let (c, op) = simons_jacobi();
        let fine = SobolevForm::new(c, op);
        let coarse = SobolevForm { rule: CompositeRule::new(6, 1e-8), ..fine.clone() };
        for cut in [Cut::None, Cut::Tip { eta: 0.125 }, Cut::Far { radius: 4.0 }] {
            let a = fine.h_norm(&tapered(), cut).unwrap();
            let b = coarse.h_norm(&tapered(), cut).unwrap();
            assert!((a - b).abs() < 1e-7 * a, "{cut:?}: {a} vs {b}");
        }
    }

    /// With `b = r^{-2}` on the Simons cone the mass integrand is `chi(r)^2 dr`,
    /// so the mass is `rt (1 + int_0^1 psi^2)`, including the closed-form tip tail.
    #[test]
    fn power_profile_tail_matches_closed_form() {
        let (c, op) = simons_jacobi();
        let form = SobolevForm::new(c, op);
        let rt = 1e-2;
        let profile = RadialProfile::Power { beta_tip: -2.0, beta_far: -40.0, knee: 1e3, taper: Some(rt) };
        let ri = form.radial_integrals(&profile, Cut::None).unwrap();
        let n = 100_000;
        let band: f64 = (0..n).map(|i| cutoff_psi((i as f64 + 0.5) / n as f64).0.powi(2)).sum::<f64>() / n as f64;
        let exact = rt * (1.0 + band);
        assert!((ri.mass - exact).abs() < 1e-9 * exact, "{} vs {exact}", ri.mass);
    }

    #[test]
    fn critical_ground_state_norm_diverges() {
        let (c, op) = simons_jacobi();
        let form = SobolevForm::new(c, op);
        let f = ModeFunction {
            terms: vec![(LinkMode::zero(), 1.0)],
            profile: RadialProfile::Power { beta_tip: -2.5, beta_far: -4.0, knee: 1.0, taper: None },
        };
        assert!(matches!(form.h_norm(&f, Cut::None), Err(Error::DivergentNorm(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn classification_matches_sign(offset in -1.0f64..1.0) {
            let (c, op) = simons_jacobi();
            let ls = op.lambda_star(&c);
            let lambda = ls + offset;
            let regime = classify(&c, &op, lambda, 1e-9);
            let expected = if offset.abs() <= 1e-9 * ls { Regime::Critical }
                else if offset < 0.0 { Regime::Subcritical } else { Regime::Supercritical };
            prop_assert_eq!(regime, expected);
        }

        #[test]
        fn norms_are_ordered(beta in -2.4f64..1.0, coef in 0.1f64..3.0) {
            let (c, op) = simons_jacobi();
            let form = SobolevForm::new(c, op);
            let f = ModeFunction {
                terms: vec![(LinkMode::zero(), coef)],
                profile: RadialProfile::Power { beta_tip: beta, beta_far: -4.0, knee: 1.0, taper: None },
            };
            let l2 = form.l2_norm(&f, Cut::None).unwrap();
            let h = form.h_norm(&f, Cut::None).unwrap();
            prop_assert!(l2 >= 0.0 && h >= l2);
        }
    }
}
