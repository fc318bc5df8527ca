//! The experiments behind `conelab run <name>`. Each one computes its
//! report, checks its invariants against pinned tolerances and returns an
//! [`Outcome`]; numerical errors become failed assertions, not aborts.

use std::f64::consts::PI;

use conelab_core::boundary::{
    bhp_verify, build_phi_chain, dirichlet_hypotheses, fatou_atomic, green_domination, gromov_delta_estimate,
    martin_kernel, martin_representation_fit, oscillation_decay, pencil_tube_check, sample_vanishing_solution,
    BoundaryPoint, MartinConfig, SamplerConfig, UnfoldedPoint,
};
use conelab_core::geometry::{s_distance_lower_bound_check, sample_pairs, uniformity_certificate};
use conelab_core::radial::{harmonic_residual, indicial_roots, unfolded_bottom, adaptedness_certificate, GreenConfig};
use conelab_core::spectral::{
    cutoff_convergence, dirichlet_eigen, hardy_check, trichotomy, Certificate, CriticalityConfig, DirichletConfig,
    HardySampler, LogGrid, ModeFunction, RadialProfile, Regime, SobolevForm,
};
use conelab_core::spectrum::enumerate_modes;
use conelab_core::{seeded_rng, ConePoint, ConeSpec, GreenEvaluator, LinkMode, LinkPoint, OperatorSpec};
use rand::Rng;

use crate::config::{ConfigError, OpKind, RunConfig};
use crate::output::{Assertion, Outcome, Trace};

/// Pinned tolerances, multiplied by `tolerance_scale` at use.
pub mod tol {
    pub const ROOT: f64 = 1e-12;
    pub const ROOT_RESIDUAL: f64 = 1e-10;
    pub const DIRICHLET_REL: f64 = 1e-5;
    /// Allowed distance of the grid-halving error ratio from 4.
    pub const ORDER_TWO: f64 = 0.2;
    pub const GROUND_STATE: f64 = 1e-3;
    pub const WITNESS_T: f64 = 1e-9;
    pub const HARDY_FLOOR: f64 = 1e-9;
    pub const HARDY_WIDENING: f64 = 0.05;
    pub const GREEN_RESIDUAL: f64 = 1e-4;
    pub const GREEN_SLOPE: f64 = 1e-3;
    pub const MARTIN_SPREAD: f64 = 1e-4;
    pub const MARTIN_SLOPE: f64 = 1e-3;
    pub const MARTIN_NORMALIZATION: f64 = 1e-12;
    pub const MARTIN_DECAY: f64 = 0.05;
    pub const REPRESENTATION: f64 = 1e-8;
    pub const FATOU: f64 = 1e-5;
    pub const BHP_LEVEL: f64 = 1e-6;
    pub const OSC_RATIO: f64 = 0.1;
    pub const TIP_LIMIT: f64 = 1e-6;
    pub const LIPSCHITZ: f64 = 1e-9;
    pub const DELTA_STABILITY: f64 = 0.05;
    pub const PENCIL_BOUND: f64 = 1e-6;
    pub const PENCIL_SPREAD: f64 = 1e-9;
    pub const GRADIENT_RATIO: f64 = 1e-12;
}

pub const EXPERIMENTS: &[&str] = &[
    "spectrum",
    "green",
    "bhp",
    "martin",
    "fatou",
    "criticality",
    "hardy",
    "hyperbolicity",
    "uniformity",
    "chains",
    "sobolev",
    "dirichlet-hypotheses",
];

pub fn theorem(name: &str) -> &'static str {
    match name {
        "spectrum" => "separation of variables and indicial roots",
        "green" => "minimal positive Green's function",
        "bhp" => "boundary Harnack inequality and continuous extension of quotients",
        "martin" => "one Martin boundary point at each singular end",
        "fatou" => "Martin representation and atomic Fatou limits",
        "criticality" => "criticality trichotomy for the shifted operator",
        "hardy" => "Hardy inequality with the sharp constant",
        "hyperbolicity" => "Gromov hyperbolicity of the unfolding and pencil tubes",
        "uniformity" => "S-distance bounds and S-uniformity",
        "chains" => "Phi-chain axioms",
        "sobolev" => "cutoff approximation in the weighted Sobolev space",
        "dirichlet-hypotheses" => "solvability hypotheses for the Dirichlet problem",
        _ => "unknown",
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown experiment {0:?}; expected one of: {list}", list = EXPERIMENTS.join(", "))]
    Unknown(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

pub fn run_experiment(name: &str, cfg: &RunConfig) -> Result<Outcome, RunError> {
    let out = match name {
        "spectrum" => spectrum(cfg)?,
        "green" => green(cfg)?,
        "bhp" => bhp(cfg)?,
        "martin" => martin(cfg)?,
        "fatou" => fatou(cfg)?,
        "criticality" => criticality(cfg)?,
        "hardy" => hardy(cfg)?,
        "hyperbolicity" => hyperbolicity(cfg)?,
        "uniformity" => uniformity(cfg)?,
        "chains" => chains(cfg)?,
        "sobolev" => sobolev(cfg)?,
        "dirichlet-hypotheses" => hypotheses(cfg)?,
        other => return Err(RunError::Unknown(other.to_string())),
    };
    Ok(out)
}

pub fn cone_label(c: &ConeSpec) -> String {
    format!("C({},{}) a={}", c.p, c.q, c.a)
}

fn setup(name: &str, cfg: &RunConfig, fallback: OpKind) -> Result<(ConeSpec, OperatorSpec, Outcome), ConfigError> {
    let c = cfg.cone_or_simons()?;
    let op = cfg.operator(fallback)?;
    let out = Outcome::new(name, theorem(name), cone_label(&c), op.name(), cfg.seed);
    Ok((c, op, out))
}

/// Unwrap a core result or record it as a failed step and bail out early.
macro_rules! step {
    ($out:ident, $label:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $out.record_error($label, err);
                return Ok($out);
            }
        }
    };
}

/// `lambda*` straight from the cone constants.
fn lambda_star_oracle(c: &ConeSpec, op: &OperatorSpec) -> f64 {
    let h = 0.5 * (c.n as f64 - 2.0);
    (h * h - op.c_a * c.kappa) / (c.a * c.a)
}

/// Mode-0 roots `-h +- sqrt(h^2 - c_A kappa - lambda a^2)` without the
/// library, as a reference.
fn mode0_roots_oracle(c: &ConeSpec, op: &OperatorSpec) -> (f64, f64, f64) {
    let h = 0.5 * (c.n as f64 - 2.0);
    let disc = h * h - op.c_a * c.kappa - op.lambda * c.a * c.a;
    let s = disc.max(0.0).sqrt();
    (-h + s, -h - s, disc)
}

pub fn spectrum(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("spectrum", cfg, OpKind::Laplace)?;
    let modes = enumerate_modes(&c, 200.0);
    let roots: Vec<_> = modes.iter().map(|m| indicial_roots(&c, &op, m)).collect();
    let mut worst_sum: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for r in roots.iter().filter(|r| !r.oscillatory) {
        let scale = 1.0 + r.mode.mu;
        worst_sum = worst_sum.max((r.gamma_plus + r.gamma_minus + (c.n as f64 - 2.0)).abs() / scale);
        let (a, b) = r.residuals(&c, &op);
        worst_residual = worst_residual.max(a.abs().max(b.abs()) / scale);
    }
    out.check(Assertion::below("root sum equals 2-n", worst_sum, cfg.tol(tol::ROOT)));
    out.check(Assertion::below("roots solve the indicial equation", worst_residual, cfg.tol(tol::ROOT_RESIDUAL)));
    let (gp, gm, _) = mode0_roots_oracle(&c, &op);
    let r0 = &roots[0];
    out.check(Assertion::close("mode-0 gamma+", r0.gamma_plus, gp, cfg.tol(tol::ROOT)));
    out.check(Assertion::close("mode-0 gamma-", r0.gamma_minus, gm, cfg.tol(tol::ROOT)));
    let op0 = op.with_lambda(0.0);
    let (bottom, bottom_mode) = unfolded_bottom(&c, &op0, 200.0);
    out.check(Assertion::holds("unfolded bottom sits at the constant mode", bottom_mode.is_constant(), format!("{bottom_mode:?}")));
    out.check(Assertion::close(
        "unfolded bottom equals a^2 lambda*",
        bottom,
        c.a * c.a * lambda_star_oracle(&c, &op0),
        cfg.tol(tol::ROOT_RESIDUAL),
    ));
    out.section("cone", &c);
    out.section("adaptedness", &adaptedness_certificate(&c, &op));
    out.section("modes", &roots.iter().take(10).collect::<Vec<_>>());
    out.traces.push(Trace::new(
        "modes.csv",
        &["k1", "k2", "mu", "mult", "disc", "gamma_plus", "gamma_minus"],
        roots
            .iter()
            .map(|r| vec![r.mode.k1 as f64, r.mode.k2 as f64, r.mode.mu, r.mode.mult as f64, r.disc, r.gamma_plus, r.gamma_minus])
            .collect(),
    ));
    Ok(out)
}

pub fn green(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("green", cfg, OpKind::Laplace)?;
    let ge = step!(out, "evaluator", GreenEvaluator::new(c, op, GreenConfig::default()));
    let mut rng = seeded_rng(cfg.seed);
    let mut rows = Vec::new();
    let mut max_asym: f64 = 0.0;
    let mut min_value = f64::INFINITY;
    let mut worst_truncation: f64 = f64::NEG_INFINITY;
    for i in 0..20 {
        let x = ConePoint { r: rng.random_range(0.2..1.0), theta: c.random_link_point(&mut rng) };
        let y = ConePoint { r: rng.random_range(2.0..6.0), theta: c.random_link_point(&mut rng) };
        let gxy = step!(out, "green value", ge.green(&x, &y));
        let gyx = step!(out, "green value", ge.green(&y, &x));
        max_asym = max_asym.max((gxy.value - gyx.value).abs());
        min_value = min_value.min(gxy.value);
        if i < 5 {
            let lo = step!(out, "truncated value", ge.green_truncated(&x, &y, gxy.mu_max));
            let hi = step!(out, "truncated value", ge.green_truncated(&x, &y, 2.0 * gxy.mu_max));
            worst_truncation = worst_truncation.max((lo.value - hi.value).abs() - lo.tail_bound);
        }
        let (c1, c2) = x.theta.factor_cosines(&y.theta);
        rows.push(vec![x.r, y.r, c1, c2, gxy.value, gxy.tail_bound, gxy.modes_used as f64]);
    }
    out.check(Assertion::at_most("symmetry on 20 pairs", max_asym, 0.0));
    out.check(Assertion::holds("positivity", min_value > 0.0, format!("min value {min_value:e}")));
    out.check(Assertion::at_most("two-level truncation within the tail bound", worst_truncation, 0.0));

    let x = ConePoint { r: 1.0, theta: c.north() };
    let y = ConePoint { r: 3.0, theta: LinkPoint::from_polar(c.p, c.q, 0.7, 1.9) };
    let r1 = step!(out, "residual", harmonic_residual(&ge, &x, &y, 1e-3));
    let r2 = step!(out, "residual", harmonic_residual(&ge, &x, &y, 2e-3));
    out.check(Assertion::below("off-pole residual, relative", (r1.residual / r1.value).abs(), cfg.tol(tol::GREEN_RESIDUAL)));
    let ratio = r2.residual / r1.residual;
    out.check(Assertion::holds("residual is second order", (3.0..5.0).contains(&ratio), format!("step-doubling ratio {ratio}")));

    // log slopes pick the minimal-growth roots at both ends
    let roots = indicial_roots(&c, &op, &LinkMode::zero());
    let pole = ConePoint { r: 1.0, theta: LinkPoint::from_polar(c.p, c.q, 1.0, 2.0) };
    let slope = |r: f64| -> conelab_core::Result<f64> {
        let e = 1e-3;
        let g1 = ge.green(&ConePoint { r: r * (1.0 - e), theta: c.north() }, &pole)?.value;
        let g2 = ge.green(&ConePoint { r: r * (1.0 + e), theta: c.north() }, &pole)?.value;
        Ok((g2.ln() - g1.ln()) / ((1.0 + e).ln() - (1.0 - e).ln()))
    };
    let s_tip = step!(out, "tip slope", slope(1e-4));
    let s_inf = step!(out, "far slope", slope(1e4));
    out.check(Assertion::close("log slope at the tip is gamma+", s_tip, roots.gamma_plus, cfg.tol(tol::GREEN_SLOPE)));
    out.check(Assertion::close("log slope at infinity is gamma-", s_inf, roots.gamma_minus, cfg.tol(tol::GREEN_SLOPE)));

    out.section("residual", &[r1, r2]);
    out.section("slopes", &serde_json::json!({ "tip": s_tip, "infinity": s_inf, "gamma_plus": roots.gamma_plus, "gamma_minus": roots.gamma_minus }));
    out.traces.push(Trace::new("green_samples.csv", &["r_x", "r_y", "cos1", "cos2", "value", "tail_bound", "modes"], rows));
    Ok(out)
}

pub fn bhp(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("bhp", cfg, OpKind::Laplace)?;
    let anchor = UnfoldedPoint { t: 0.0, theta: c.north() };
    let mut rng = seeded_rng(cfg.seed);
    let chain = step!(out, "chain", build_phi_chain(&c, BoundaryPoint::Tip, cfg.levels, cfg.spacing * c.a, &anchor, 16, 0.05, &mut rng));
    out.check(Assertion::holds("chain axioms", chain.check.violations == 0 && chain.check.nested, format!("{:?}", chain.check)));
    let sampler = SamplerConfig::default();
    let rep = step!(out, "boundary Harnack", bhp_verify(&c, &op, &chain, cfg.trials, &sampler, &mut rng));
    out.check(Assertion::holds("C_hat finite", rep.c_hat.is_finite() && rep.c_hat >= 1.0, format!("C_hat = {}", rep.c_hat)));
    out.check(Assertion::at_most("level-stable", rep.deep_half_max, rep.first_half_max + cfg.tol(tol::BHP_LEVEL)));

    // oscillation decay and tip limits over the same number of pairs
    let working = chain.depth_log(0).exp();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_limit: f64 = 0.0;
    let mut first_trace = None;
    for _ in 0..cfg.trials {
        let u = step!(out, "sampling", sample_vanishing_solution(&c, &op, chain.boundary, working, &sampler, &mut rng));
        let v = step!(out, "sampling", sample_vanishing_solution(&c, &op, chain.boundary, working, &sampler, &mut rng));
        let tr = step!(out, "oscillation", oscillation_decay(&c, &chain, &u, &v, &mut rng));
        worst_ratio = worst_ratio.max((tr.fitted_ratio / tr.predicted_ratio - 1.0).abs());
        worst_limit = worst_limit.max((tr.limit_estimate / tr.limit_expected - 1.0).abs());
        first_trace.get_or_insert(tr);
    }
    out.check(Assertion::below("osc ratio matches the mode gap", worst_ratio, cfg.tol(tol::OSC_RATIO)));
    out.check(Assertion::below("u/v tip limit equals the coefficient ratio", worst_limit, cfg.tol(tol::TIP_LIMIT)));
    let tr = first_trace.expect("at least one trial");
    out.check(Assertion::holds("osc ratio below one", tr.fitted_ratio < 1.0, format!("{}", tr.fitted_ratio)));

    // Green's function dominates vanishing solutions near the tip
    if op.is_subcritical(&c) {
        let ge = step!(out, "evaluator", GreenEvaluator::new(c, op, GreenConfig::default()));
        let p = ConePoint { r: 1.0, theta: c.north() };
        let thetas: Vec<LinkPoint> = (0..6).map(|_| c.random_link_point(&mut rng)).collect();
        let radii: Vec<f64> = (0..12).map(|i| 0.5 * 0.5f64.powi(i)).collect();
        let u = step!(out, "sampling", sample_vanishing_solution(&c, &op, BoundaryPoint::Tip, 0.5, &sampler, &mut rng));
        let dom = step!(out, "domination", green_domination(&ge, &u, &p, &radii, &thetas, &[0.5, 0.25, 0.125, 0.0625]));
        let ok = dom.minima.iter().all(|m| m.1 > 0.0) && dom.minima.windows(2).all(|w| w[1].1 >= w[0].1);
        out.check(Assertion::holds("Green's function dominates near the tip", ok, format!("{:?}", dom.minima)));
        out.section("domination", &dom);
    }

    out.section("chain", &serde_json::json!({ "levels": chain.levels, "a_delta": chain.a_delta, "b_delta": chain.b_delta, "check": chain.check }));
    out.section("bhp", &rep);
    out.traces.push(Trace::new(
        "bhp_levels.csv",
        &["level", "depth_log", "Q"],
        rep.per_level.iter().enumerate().map(|(i, q)| vec![i as f64, chain.depth_log(i), *q]).collect(),
    ));
    out.traces.push(Trace::new(
        "oscillation.csv",
        &["shell", "osc", "predicted"],
        tr.osc
            .iter()
            .enumerate()
            .map(|(k, o)| vec![k as f64, *o, tr.osc[1.min(tr.osc.len() - 1)] * tr.predicted_ratio.powi(k as i32 - 1)])
            .collect(),
    ));
    out.section("oscillation", &tr);
    Ok(out)
}

pub fn martin(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("martin", cfg, OpKind::Laplace)?;
    let ge = step!(out, "evaluator", GreenEvaluator::new(c, op, GreenConfig::default()));
    let roots = indicial_roots(&c, &op, &LinkMode::zero());
    let tip_cfg = MartinConfig { directions: cfg.dirs, n_max: cfg.n, seed: cfg.seed, ..MartinConfig::tip() };
    let tip = step!(out, "tip kernels", martin_kernel(&ge, &tip_cfg));
    out.check(Assertion::below("tip kernels agree across directions", tip.direction_spread, cfg.tol(tol::MARTIN_SPREAD)));
    out.check(Assertion::close("tip kernel slope is gamma-", tip.slope, roots.gamma_minus, cfg.tol(tol::MARTIN_SLOPE)));
    out.check(Assertion::at_most("normalization at the base point", tip.normalization_error, cfg.tol(tol::MARTIN_NORMALIZATION)));
    // relative disagreement comes from the slowest nonconstant mode and
    // shrinks like r_n^gap
    let gap = enumerate_modes(&c, 200.0)
        .iter()
        .filter(|m| !m.is_constant())
        .map(|m| indicial_roots(&c, &op, m).gamma_plus - roots.gamma_plus)
        .fold(f64::INFINITY, f64::min);
    let deeper_n = cfg.n + 4;
    if deeper_n <= 30 {
        let deeper = step!(out, "tip kernels", martin_kernel(&ge, &MartinConfig { n_max: deeper_n, ..tip_cfg.clone() }));
        let observed = deeper.direction_spread_rel / tip.direction_spread_rel;
        let name = "relative spread shrinks like r_n^gap";
        // below ~1e4 truncation tolerances the spread is rounding noise
        if deeper.direction_spread_rel > 1e4 * GreenConfig::default().tol {
            out.check(Assertion::close_rel(name, observed, 2f64.powf(-4.0 * gap), cfg.tol(tol::MARTIN_DECAY)));
        } else {
            out.check(Assertion::holds(name, true, format!("not resolvable: spread {:e} at the truncation floor", deeper.direction_spread_rel)));
        }
        out.section("tip_deeper", &deeper);
    }
    let inf_cfg = MartinConfig { directions: cfg.dirs, n_max: cfg.n, seed: cfg.seed, ..MartinConfig::infinity() };
    let inf = step!(out, "far kernels", martin_kernel(&ge, &inf_cfg));
    out.check(Assertion::close("far kernel slope is gamma+", inf.slope, roots.gamma_plus, cfg.tol(tol::MARTIN_SLOPE)));
    let mut rows = Vec::new();
    for (label, est) in [(0.0, &tip), (1.0, &inf)] {
        for (d, trace) in est.consecutive.iter().enumerate() {
            for (i, v) in trace.iter().enumerate() {
                rows.push(vec![label, d as f64, (i + 2) as f64, *v]);
            }
        }
    }
    out.traces.push(Trace::new("martin_convergence.csv", &["end", "direction", "n", "sup_rel_change"], rows));
    out.traces.push(Trace::new(
        "martin_limit.csv",
        &["end", "r", "K"],
        [(0.0, &tip), (1.0, &inf)].iter().flat_map(|(l, e)| e.limit_profile.iter().map(move |(r, k)| vec![*l, *r, *k])).collect(),
    ));
    out.section("tip", &tip);
    out.section("infinity", &inf);
    Ok(out)
}

pub fn fatou(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("fatou", cfg, OpKind::Laplace)?;
    let roots = indicial_roots(&c, &op, &LinkMode::zero());
    let radii: Vec<f64> = (0..21).map(|i| 10f64.powf(-1.0 + 0.1 * i as f64)).collect();
    let mut rng = seeded_rng(cfg.seed);
    let thetas: Vec<LinkPoint> = (0..3).map(|_| c.random_link_point(&mut rng)).collect();
    let (gp, gm) = (roots.gamma_plus, roots.gamma_minus);
    let u = move |x: &ConePoint| 2.0 * x.r.powf(gm) + 3.0 * x.r.powf(gp);
    let fit = step!(out, "representation", martin_representation_fit(&c, &op, &u, &radii, &thetas, cfg.tol(tol::REPRESENTATION)));
    out.check(Assertion::below("two-atom fit residual", fit.residual, cfg.tol(tol::REPRESENTATION)));
    out.check(Assertion::holds("coefficients nonnegative", fit.mu_tip >= 0.0 && fit.mu_inf >= 0.0, format!("{fit:?}")));
    out.check(Assertion::close("tip atom", fit.mu_tip, 2.0, cfg.tol(tol::REPRESENTATION)));
    out.check(Assertion::close("far atom", fit.mu_inf, 3.0, cfg.tol(tol::REPRESENTATION)));
    let negative = martin_representation_fit(&c, &op, &move |x: &ConePoint| 2.0 * x.r.powf(gm) - 1e-3 * x.r.powf(gp), &[0.1, 0.2, 0.3], &thetas, 1e-8);
    out.check(Assertion::holds("negative atoms are refused", negative.is_err(), format!("{negative:?}")));

    let omega = 0.5 / c.a;
    let rep = step!(out, "Fatou limits", fatou_atomic(&c, &op, (1.0, 2.0), (2.0, 0.5), omega, 8, cfg.seed));
    let tip_err = (rep.tip_ratio.unwrap_or(f64::NAN) - 0.5).abs();
    let inf_err = (rep.inf_ratio.unwrap_or(f64::NAN) - 4.0).abs();
    out.check(Assertion::below("tip limit mu0/nu0", tip_err, cfg.tol(tol::FATOU)));
    out.check(Assertion::below("far limit mu_inf/nu_inf", inf_err, cfg.tol(tol::FATOU)));
    out.section("representation", &fit);
    out.section("fatou", &rep);
    out.traces.push(Trace::new(
        "representation.csv",
        &["r", "u", "fit"],
        radii.iter().map(|&r| vec![r, 2.0 * r.powf(gm) + 3.0 * r.powf(gp), fit.mu_tip * r.powf(gm) + fit.mu_inf * r.powf(gp)]).collect(),
    ));
    Ok(out)
}

/// Supercritical query used for the eigenvalue-drop witness.
pub fn supercritical_query(lambda_star: f64) -> f64 {
    lambda_star + lambda_star.abs().max(1e-3)
}

pub fn criticality(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("criticality", cfg, OpKind::Jacobi)?;
    let op0 = op.with_lambda(0.0);
    let a2 = c.a * c.a;
    let ls = lambda_star_oracle(&c, &op0);
    let closed = |t: f64| ls + (PI / t).powi(2) / a2;
    let ccfg = CriticalityConfig { schedule: cfg.schedule.clone(), ..CriticalityConfig::default() };
    let query = step!(out, "trichotomy", trichotomy(&c, &op0, cfg.lambda, &ccfg));
    out.check(Assertion::close("lambda* from the library", query.lambda_star, ls, cfg.tol(tol::ROOT)));

    // Dirichlet eigenvalues on N = 4096 grids
    let dcfg = DirichletConfig::default();
    let mut rows = Vec::new();
    let mut worst_rel: f64 = 0.0;
    let mut decreasing = true;
    let mut prev = f64::INFINITY;
    for &t in &cfg.schedule {
        let grid = step!(out, "grid", LogGrid::new(t, 4096));
        let eig = step!(out, "Dirichlet eigenvalue", dirichlet_eigen(&c, &op0, &grid, &LinkMode::zero(), &dcfg));
        worst_rel = worst_rel.max((eig.lambda / closed(t) - 1.0).abs());
        decreasing &= eig.lambda < prev;
        prev = eig.lambda;
        rows.push(vec![t, eig.lambda, closed(t), eig.lambda - ls]);
    }
    out.check(Assertion::below("Dirichlet values match the closed form at N=4096", worst_rel, cfg.tol(tol::DIRICHLET_REL)));
    out.check(Assertion::holds("Dirichlet values strictly decrease", decreasing, ""));

    // second-order convergence on three grids
    let t0 = cfg.schedule[0];
    let mut errors = Vec::new();
    for n in [1024, 2048, 4096] {
        let grid = step!(out, "grid", LogGrid::new(t0, n));
        let eig = step!(out, "Dirichlet eigenvalue", dirichlet_eigen(&c, &op0, &grid, &LinkMode::zero(), &dcfg));
        errors.push((n as f64, grid.h(), eig.lambda - closed(t0)));
    }
    let ratios = [errors[0].2 / errors[1].2, errors[1].2 / errors[2].2];
    let worst_order = ratios.iter().map(|r| (r - 4.0).abs()).fold(0.0, f64::max);
    out.check(Assertion::below("O(h^2) convergence across three grids", worst_order, cfg.tol(tol::ORDER_TWO)));

    // critical query: ground state
    let crit = step!(out, "critical query", trichotomy(&c, &op0, ls, &ccfg));
    out.check(Assertion::holds("lambda* is critical", crit.regime == Regime::Critical, format!("{:?}", crit.regime)));
    let mut gs_rows = Vec::new();
    match &crit.witness {
        Certificate::GroundState { convergence, green_refused, .. } => {
            let last = convergence.last().map(|e| e.sup_distance).unwrap_or(f64::NAN);
            out.check(Assertion::below("ground state profile converges to r^{-(n-2)/2}", last, cfg.tol(tol::GROUND_STATE)));
            out.check(Assertion::holds("Green's function refused at criticality", *green_refused, ""));
            gs_rows = convergence.iter().map(|e| vec![e.t_len, e.sup_distance]).collect();
        }
        other => out.check(Assertion::holds("ground state certificate", false, format!("{other:?}"))),
    }

    // supercritical query: an annulus whose eigenvalue drops to the query
    let lq = supercritical_query(ls);
    let sup = step!(out, "supercritical query", trichotomy(&c, &op0, lq, &ccfg));
    let t_expected = PI / (c.a * (lq - ls).sqrt());
    match &sup.witness {
        Certificate::EigenvalueDrop { t_len, dirichlet_lambda, .. } => {
            out.check(Assertion::close("witness annulus length", *t_len, t_expected, cfg.tol(tol::WITNESS_T)));
            out.check(Assertion::at_most("witness eigenvalue does not exceed the query", *dirichlet_lambda, lq + 1e-12));
        }
        other => out.check(Assertion::holds("eigenvalue drop certificate", false, format!("{other:?}"))),
    }

    out.section("query", &query);
    out.section("critical", &crit);
    out.section("supercritical", &sup);
    out.section("order", &serde_json::json!({ "T": t0, "errors": errors, "ratios": ratios }));
    out.traces.push(Trace::new("dirichlet_sequence.csv", &["T", "Lambda", "closed_form", "gap_to_lambda_star"], rows));
    out.traces.push(Trace::new("ground_state.csv", &["T", "sup_distance"], gs_rows));
    out.traces.push(Trace::new("order.csv", &["N", "h", "error"], errors.iter().map(|e| vec![e.0, e.1, e.2]).collect()));
    Ok(out)
}

pub fn hardy(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("hardy", cfg, OpKind::Jacobi)?;
    let sampler = HardySampler { count: cfg.hardy_samples, seed: cfg.seed, ..HardySampler::default() };
    let widths = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
    let rep = step!(out, "Hardy check", hardy_check(&c, &op, &sampler, &widths));
    out.check(Assertion::at_least("all quotients above lambda* - lambda", rep.min_quotient, rep.bound - cfg.tol(tol::HARDY_FLOOR)));
    let last = rep.widening.last().map(|w| w.relative_gap).unwrap_or(f64::NAN);
    out.check(Assertion::below("widening bumps approach lambda*", last, cfg.tol(tol::HARDY_WIDENING)));
    let monotone = rep.widening.windows(2).all(|w| w[1].quotient < w[0].quotient);
    out.check(Assertion::holds("widening quotients decrease", monotone, ""));
    out.section("hardy", &rep);
    out.traces.push(Trace::new(
        "widening.csv",
        &["t0", "quotient", "relative_gap", "dirichlet_support"],
        rep.widening.iter().map(|w| vec![w.t0, w.quotient, w.relative_gap, w.dirichlet_support]).collect(),
    ));
    Ok(out)
}

pub fn hyperbolicity(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, _, mut out) = setup("hyperbolicity", cfg, OpKind::Laplace)?;
    let window = 20.0;
    let one = step!(out, "delta estimate", gromov_delta_estimate(&c, cfg.quadruples, window, &mut seeded_rng(cfg.seed)));
    let two = step!(out, "delta estimate", gromov_delta_estimate(&c, 2 * cfg.quadruples, window, &mut seeded_rng(cfg.seed.wrapping_add(1))));
    let (lo, hi) = (c.a, c.a * (PI + 0.5));
    for (label, r) in [("delta_hat", &one), ("delta_hat doubled", &two)] {
        out.check(Assertion::holds(
            &format!("{label} within [a, a(pi+1/2)]"),
            r.delta_hat >= lo && r.delta_hat <= hi,
            format!("{} in [{lo}, {hi}]", r.delta_hat),
        ));
    }
    let change = (one.delta_hat - two.delta_hat).abs() / one.delta_hat.max(two.delta_hat);
    out.check(Assertion::below("delta_hat stable under sample doubling", change, cfg.tol(tol::DELTA_STABILITY)));

    let tube = step!(out, "pencil tubes", pencil_tube_check(&c, 0.5 / c.a, &[0.1, 0.05, 0.025], 2000, cfg.seed));
    out.check(Assertion::at_most("pencil tube width", tube.zeta_hat, c.a * PI + cfg.tol(tol::PENCIL_BOUND)));
    out.check(Assertion::at_most("pencil tube width independent of eta", tube.eta_spread, cfg.tol(tol::PENCIL_SPREAD)));
    out.section("delta", &[one, two]);
    out.section("pencil", &tube);
    out.traces.push(Trace::new(
        "delta.csv",
        &["count", "delta_hat", "first_half", "second_half"],
        [one, two].iter().map(|r| vec![r.count as f64, r.delta_hat, r.first_half, r.second_half]).collect(),
    ));
    Ok(out)
}

pub fn uniformity(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, _, mut out) = setup("uniformity", cfg, OpKind::Laplace)?;
    let mut rng = seeded_rng(cfg.seed);
    let pairs = sample_pairs(&c, cfg.pairs, 1e-2, 1e2, &mut rng);
    let lip = step!(out, "Lipschitz check", s_distance_lower_bound_check(&c, &pairs, cfg.tol(tol::LIPSCHITZ)));
    out.check(Assertion::at_most("1/<A> is 1/a-Lipschitz", lip.max_ratio, 1.0 / c.a + cfg.tol(tol::LIPSCHITZ)));
    let cap = 1e3;
    let uni = step!(out, "uniformity", uniformity_certificate(&c, &pairs, cap));
    out.check(Assertion::holds("one constant certifies every pair", uni.c_uniform.is_finite() && uni.c_uniform <= cap, format!("c = {}", uni.c_uniform)));
    let mut scale_rows = vec![vec![1.0, uni.c_uniform]];
    for tau in [2.0, 0.125, 1024.0] {
        let scaled: Vec<_> = pairs.iter().map(|(x, y)| (x.scaled(tau), y.scaled(tau))).collect();
        let s = step!(out, "uniformity", uniformity_certificate(&c, &scaled, cap));
        out.check(Assertion::at_most(&format!("scale invariance at tau={tau}"), (s.c_uniform - uni.c_uniform).abs(), 0.0));
        scale_rows.push(vec![tau, s.c_uniform]);
    }
    out.section("lipschitz", &lip);
    out.section("uniformity", &uni);
    out.traces.push(Trace::new("scaling.csv", &["tau", "c_uniform"], scale_rows));
    Ok(out)
}

pub fn chains(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, _, mut out) = setup("chains", cfg, OpKind::Laplace)?;
    let anchor = UnfoldedPoint { t: 0.0, theta: c.north() };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (label, end) in [(0.0, BoundaryPoint::Tip), (1.0, BoundaryPoint::Infinity)] {
        let mut rng = seeded_rng(cfg.seed);
        let ch = step!(out, "chain", build_phi_chain(&c, end, cfg.levels, cfg.spacing * c.a, &anchor, 64, 0.05, &mut rng));
        out.check(Assertion::holds(
            &format!("chain axioms at {end:?}"),
            ch.check.violations == 0 && ch.check.nested,
            format!("{:?}", ch.check),
        ));
        let step = conelab_core::boundary::unfolded_distance(&c, &ch.track_point(0), &ch.track_point(1));
        out.check(Assertion::holds(
            &format!("track step within [Phi(0), 3 Phi(0)] at {end:?}"),
            ch.phi(0.0) <= step && step <= 3.0 * ch.phi(0.0),
            format!("step {step}, Phi(0) {}", ch.phi(0.0)),
        ));
        rows.extend(ch.levels.iter().zip(&ch.radii).enumerate().map(|(i, (t, r))| vec![label, i as f64, *t, *r]));
        reports.push(serde_json::json!({ "end": end, "levels": ch.levels, "a_delta": ch.a_delta, "b_delta": ch.b_delta, "check": ch.check }));
    }
    out.section("chains", &reports);
    out.traces.push(Trace::new("chain_levels.csv", &["end", "level", "t", "radius"], rows));
    Ok(out)
}

pub fn sobolev(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("sobolev", cfg, OpKind::Jacobi)?;
    let form = SobolevForm::new(c, op);
    let f = ModeFunction {
        terms: vec![(LinkMode::zero(), 1.0), (LinkMode::new(&c, 1, 1), 0.5)],
        profile: RadialProfile::Power { beta_tip: -2.0, beta_far: -4.0, knee: 1.0, taper: Some(50.0) },
    };
    let etas = [0.25, 0.125, 0.0625, 0.03125];
    let radii = [2.0, 4.0, 8.0, 16.0];
    let rep = step!(out, "cutoff norms", cutoff_convergence(&form, &f, &etas, &radii, 1000, cfg.seed));
    out.check(Assertion::holds("tip cutoff norms decrease", rep.tip.windows(2).all(|w| w[1].norm < w[0].norm), ""));
    out.check(Assertion::holds("far cutoff norms decrease", rep.far.windows(2).all(|w| w[1].norm < w[0].norm), ""));
    out.check(Assertion::at_most("cutoff gradient bounds", rep.max_gradient_ratio, 1.0 + cfg.tol(tol::GRADIENT_RATIO)));
    out.check(Assertion::holds("cutoff supports", rep.support_violations == 0, format!("{} violations", rep.support_violations)));
    out.section("cutoff", &rep);
    let mut rows: Vec<Vec<f64>> = rep.tip.iter().map(|e| vec![0.0, e.parameter, e.norm]).collect();
    rows.extend(rep.far.iter().map(|e| vec![1.0, e.parameter, e.norm]));
    out.traces.push(Trace::new("cutoff_norms.csv", &["end", "parameter", "norm"], rows));
    Ok(out)
}

/// Hypothesis flags derived from the mode-0 roots alone.
fn hypothesis_oracle(c: &ConeSpec, op: &OperatorSpec) -> [bool; 4] {
    let constants = op.c_a * c.kappa + op.lambda * c.a * c.a == 0.0;
    let (gp, gm, _) = mode0_roots_oracle(c, op);
    let (tip, inf) = (gp > 0.0, gm < 0.0);
    [constants, tip, inf, constants && tip && inf]
}

pub fn hypotheses(cfg: &RunConfig) -> Result<Outcome, ConfigError> {
    let (c, op, mut out) = setup("dirichlet-hypotheses", cfg, OpKind::Laplace)?;
    let catalog = [(3, 3), (2, 4)];
    let mut cases = vec![(c, op)];
    for (p, q) in catalog {
        let cone = step!(out, "catalog cone", conelab_core::geometry::make_cone(p, q, None));
        for base in [OperatorSpec::laplace(), OperatorSpec::jacobi()] {
            for lambda in [0.0, 1.0 / 48.0] {
                cases.push((cone, base.with_lambda(lambda)));
            }
        }
    }
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut mismatches = Vec::new();
    let mut harmonic_ok = true;
    for (cone, o) in &cases {
        let rep = dirichlet_hypotheses(cone, o);
        let got = [rep.constants_harmonic, rep.green_to_zero_at_tip, rep.green_to_zero_at_infinity, rep.solvable];
        let want = hypothesis_oracle(cone, o);
        if got != want {
            mismatches.push(format!("C({},{}) {}: {got:?} vs {want:?}", cone.p, cone.q, o.name()));
        }
        if rep.constants_harmonic {
            harmonic_ok &= !rep.solvable && rep.gamma_plus0.abs() <= tol::ROOT;
        }
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        rows.push(vec![cone.p as f64, cone.q as f64, o.c_a, o.lambda, flag(got[0]), flag(got[1]), flag(got[2]), flag(got[3]), rep.gamma_plus0, rep.gamma_minus0]);
        reports.push(serde_json::json!({ "cone": cone_label(cone), "operator": o.name(), "report": rep }));
    }
    out.check(Assertion::holds("every hypothesis flag matches the root oracle", mismatches.is_empty(), mismatches.join("; ")));
    out.check(Assertion::holds("harmonic constants force unsolvable with gamma+ = 0", harmonic_ok, ""));
    out.section("cases", &reports);
    out.traces.push(Trace::new(
        "hypotheses.csv",
        &["p", "q", "c_a", "lambda", "constants_harmonic", "green_to_zero_at_tip", "green_to_zero_at_infinity", "solvable", "gamma_plus0", "gamma_minus0"],
        rows,
    ));
    Ok(out)
}
