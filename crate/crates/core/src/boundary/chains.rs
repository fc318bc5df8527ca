use rand::Rng;
use serde::{Deserialize, Serialize};

use super::unfolding::{unfolded_distance, UnfoldedPoint};
use super::BoundaryPoint;
use crate::geometry::{ConeSpec, LinkPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub sampled_points: usize,
    pub violations: usize,
    /// Smallest slack over all sampled inequalities.
    pub min_slack: f64,
    pub nested: bool,
}

/// Nested punctured balls about a boundary point with track points on the
/// anchor ray and a fitted affine `Phi(s) = a_delta + b_delta s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiChain {
    pub boundary: BoundaryPoint,
    pub spacing: f64,
    pub anchor: UnfoldedPoint,
    /// `t_i`, with `N_i = {t < t_i}` at the tip and `{t > t_i}` at infinity.
    pub levels: Vec<f64>,
    pub radii: Vec<f64>,
    pub a_delta: f64,
    pub b_delta: f64,
    pub check: ChainCheck,
}

impl PhiChain {
    pub fn track_point(&self, i: usize) -> UnfoldedPoint {
        UnfoldedPoint { t: self.levels[i], theta: self.anchor.theta.clone() }
    }

    pub fn phi(&self, s: f64) -> f64 {
        self.a_delta + self.b_delta * s
    }

    /// `log` of the depth coordinate at level `i`; decreases with `i`.
    pub fn depth_log(&self, i: usize) -> f64 {
        match self.boundary {
            BoundaryPoint::Tip => self.levels[i],
            BoundaryPoint::Infinity => -self.levels[i],
        }
    }
}

/// Build and verify a chain of `m` levels spaced `spacing` apart in
/// unfolded length, starting at the anchor level.
#[allow(clippy::too_many_arguments)]
pub fn build_phi_chain<R: Rng + ?Sized>(
    c: &ConeSpec,
    boundary: BoundaryPoint,
    m: usize,
    spacing: f64,
    anchor: &UnfoldedPoint,
    samples_per_level: usize,
    b_floor: f64,
    rng: &mut R,
) -> Result<PhiChain> {
    if m < 3 || !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidInput(format!("chain needs m >= 3 and positive spacing, got m={m}, spacing={spacing}")));
    }
    let dt = spacing / c.a;
    let sign = match boundary {
        BoundaryPoint::Tip => -1.0,
        BoundaryPoint::Infinity => 1.0,
    };
    let levels: Vec<f64> = (0..m).map(|i| anchor.t + sign * dt * i as f64).collect();
    let radii: Vec<f64> = levels.iter().map(|t| t.exp()).collect();

    // boundary samples: the same link points on every level, including the
    // track direction and its antipode
    let mut thetas: Vec<LinkPoint> = vec![anchor.theta.clone(), anchor.theta.antipode()];
    thetas.extend((0..samples_per_level).map(|_| c.random_link_point(rng)));
    let on_level = |i: usize, th: &LinkPoint| UnfoldedPoint { t: levels[i], theta: th.clone() };

    // (distance to the track point, distance to a neighbouring boundary)
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for i in 0..m {
        let track = UnfoldedPoint { t: levels[i], theta: anchor.theta.clone() };
        for th in &thetas {
            let x = on_level(i, th);
            let to_track = unfolded_distance(c, &x, &track);
            for j in [i.checked_sub(1), Some(i + 1).filter(|&j| j < m)].into_iter().flatten() {
                let gap = thetas
                    .iter()
                    .map(|y| unfolded_distance(c, &x, &on_level(j, y)))
                    .chain(std::iter::once(unfolded_distance(c, &x, &on_level(j, th))))
                    .fold(f64::INFINITY, f64::min);
                rows.push((to_track, gap));
            }
        }
    }
    let max_d = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let min_gap = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let b_delta = if max_d > 0.0 { ((min_gap - spacing / 3.0) / max_d).min(1.0) } else { 1.0 };
    if !(b_delta >= b_floor) {
        return Err(Error::FitFailure(format!(
            "slope {b_delta:.3} below floor {b_floor} (spacing {spacing} against track spread {max_d:.3})"
        )));
    }
    let a_delta = rows.iter().map(|(d, g)| g - b_delta * d).fold(spacing, f64::min);
    let tol = 1e-12 * spacing;
    let track_steps: Vec<f64> = (1..m)
        .map(|i| unfolded_distance(c, &on_level(i - 1, &anchor.theta), &on_level(i, &anchor.theta)))
        .collect();
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for &(d, g) in &rows {
        let slack = g - (a_delta + b_delta * d);
        min_slack = min_slack.min(slack);
        if slack < -tol {
            violations += 1;
        }
    }
    for &step in &track_steps {
        let slack = (step - a_delta).min(3.0 * a_delta - step);
        min_slack = min_slack.min(slack);
        if slack < -tol {
            violations += 1;
        }
    }
    let nested = levels.windows(2).all(|w| sign * (w[1] - w[0]) > 0.0);
    Ok(PhiChain {
        boundary,
        spacing,
        anchor: anchor.clone(),
        levels,
        radii,
        a_delta,
        b_delta,
        check: ChainCheck { sampled_points: rows.len() + track_steps.len(), violations, min_slack, nested },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use std::f64::consts::PI;

    fn anchor(c: &ConeSpec) -> UnfoldedPoint {
        UnfoldedPoint { t: 0.0, theta: c.north() }
    }

    #[test]
    fn default_spacing_chain_is_valid() {
        let c = ConeSpec::simons();
        let ch = build_phi_chain(&c, BoundaryPoint::Tip, 12, 5.0 * c.a, &anchor(&c), 64, 0.05, &mut seeded_rng(1)).unwrap();
        assert_eq!(ch.check.violations, 0);
        assert!(ch.check.nested);
        assert!(ch.radii.windows(2).all(|w| w[1] < w[0]));
        assert!((ch.b_delta - 1.0).abs() < 1e-12);
        // track spread is the link diameter times a
        assert!((ch.a_delta - (5.0 - PI) * c.a).abs() < 1e-9);
        let step = unfolded_distance(&c, &ch.track_point(0), &ch.track_point(1));
        assert!(ch.phi(0.0) <= step && step <= 3.0 * ch.phi(0.0));
    }

    #[test]
    fn wide_spacing_chain_is_valid() {
        let c = ConeSpec::simons();
        let spacing = 300.0 * 1.3 * c.a;
        let ch = build_phi_chain(&c, BoundaryPoint::Tip, 4, spacing, &anchor(&c), 16, 0.05, &mut seeded_rng(2)).unwrap();
        assert_eq!(ch.check.violations, 0);
    }

    #[test]
    fn infinity_chain_mirrors_tip_chain() {
        let c = ConeSpec::simons();
        let tip = build_phi_chain(&c, BoundaryPoint::Tip, 8, 5.0 * c.a, &anchor(&c), 32, 0.05, &mut seeded_rng(3)).unwrap();
        let inf = build_phi_chain(&c, BoundaryPoint::Infinity, 8, 5.0 * c.a, &anchor(&c), 32, 0.05, &mut seeded_rng(3)).unwrap();
        assert_eq!(tip.a_delta, inf.a_delta);
        assert_eq!(tip.b_delta, inf.b_delta);
        for (a, b) in tip.levels.iter().zip(&inf.levels) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn tight_spacing_fails_to_fit() {
        let c = ConeSpec::simons();
        let r = build_phi_chain(&c, BoundaryPoint::Tip, 6, 0.2 * c.a, &anchor(&c), 32, 0.05, &mut seeded_rng(4));
        assert!(matches!(r, Err(Error::FitFailure(_))));
    }
}
