//! Gauss–Legendre rules and a certified composite integrator.

use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[lo, hi]` with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre with `nodes_per_cell` nodes per cell; the cell
/// count doubles until the relative change drops below `rel_tol`.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    rule: GaussLegendre,
    pub rel_tol: f64,
    pub initial_cells: usize,
    pub max_cells: usize,
}

impl Default for CompositeRule {
    fn default() -> Self {
        Self::new(8, 1e-10)
    }
}

impl CompositeRule {
    pub fn new(nodes_per_cell: usize, rel_tol: f64) -> Self {
        Self {
            rule: GaussLegendre::new(nodes_per_cell),
            rel_tol,
            initial_cells: 4,
            max_cells: 1 << 16,
        }
    }

    pub fn fixed(&self, lo: f64, hi: f64, cells: usize, f: &mut impl FnMut(f64) -> f64) -> f64 {
        let width = (hi - lo) / cells as f64;
        (0..cells)
            .map(|c| {
                let a = lo + c as f64 * width;
                self.rule.integrate(a, a + width, &mut *f)
            })
            .sum()
    }

    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite interval [{lo}, {hi}]")));
        }
        if lo == hi {
            return Ok(0.0);
        }
        let mut cells = self.initial_cells;
        let mut prev = self.fixed(lo, hi, cells, &mut f);
        if !prev.is_finite() {
            return Err(Error::QuadratureNonConvergence("non-finite integrand".into()));
        }
        while cells < self.max_cells {
            cells *= 2;
            let next = self.fixed(lo, hi, cells, &mut f);
            if !next.is_finite() {
                return Err(Error::QuadratureNonConvergence("non-finite integrand".into()));
            }
            let scale = next.abs().max(f64::MIN_POSITIVE);
            if (next - prev).abs() <= self.rel_tol * scale || (next == 0.0 && prev == 0.0) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::QuadratureNonConvergence(format!(
            "no {:.0e} relative agreement after {} cells on [{lo}, {hi}]",
            self.rel_tol, self.max_cells
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(5);
        // degree 9 is the exactness limit for five nodes
        let val = rule.integrate(-1.0, 1.0, |x| x.powi(8) + x.powi(9));
        assert!((val - 2.0 / 9.0).abs() < 1e-14);
        let sum_w: f64 = rule.weights.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_converges_on_smooth_integrand() {
        let q = CompositeRule::default();
        let val = q.integrate(0.0, std::f64::consts::PI, f64::sin).unwrap();
        assert!((val - 2.0).abs() < 1e-12);
    }

    #[test]
    fn composite_rule_rejects_nan() {
        let q = CompositeRule::default();
        assert!(q.integrate(0.0, 1.0, |_| f64::NAN).is_err());
    }
}
