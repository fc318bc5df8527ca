use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{cone_distance, link_distance, ConePoint, ConeSpec, LinkPoint};
use crate::{Error, Result};

/// Point of the unfolded cylinder, `t = log r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldedPoint {
    pub t: f64,
    pub theta: LinkPoint,
}

impl UnfoldedPoint {
    pub fn from_cone(x: &ConePoint) -> Self {
        Self { t: x.r.ln(), theta: x.theta.clone() }
    }

    pub fn to_cone(&self) -> ConePoint {
        ConePoint { r: self.t.exp(), theta: self.theta.clone() }
    }
}

/// Distance of `<A>^2 g = a^2 (dt^2 + g_link)`.
pub fn unfolded_distance(c: &ConeSpec, x: &UnfoldedPoint, y: &UnfoldedPoint) -> f64 {
    let dt = x.t - y.t;
    let dl = link_distance(c, &x.theta, &y.theta);
    c.a * (dt * dt + dl * dl).sqrt()
}

/// `<A>`-length of the straight cylinder geodesic from `x` to `y`, measured
/// as a polyline in the cone metric with `<A>` taken at segment midpoints.
pub fn unfolded_polyline_length(c: &ConeSpec, x: &UnfoldedPoint, y: &UnfoldedPoint, segments: usize) -> f64 {
    let st = c.s_transform();
    let point = |s: f64| ConePoint { r: (x.t + s * (y.t - x.t)).exp(), theta: x.theta.geodesic_towards(&y.theta, s) };
    let mut prev = point(0.0);
    let mut total = 0.0;
    for i in 1..=segments {
        let next = point(i as f64 / segments as f64);
        let mid = (prev.r * next.r).sqrt();
        total += st.value(mid) * cone_distance(c, &prev, &next);
        prev = next;
    }
    total
}

/// `(largest - second largest) / 2` of the three pair sums.
pub fn four_point_delta(c: &ConeSpec, q: &[UnfoldedPoint; 4]) -> f64 {
    let d = |i: usize, j: usize| unfolded_distance(c, &q[i], &q[j]);
    let mut s = [d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2)];
    s.sort_by(f64::total_cmp);
    0.5 * (s[2] - s[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub count: usize,
    pub delta_hat: f64,
    pub first_half: f64,
    pub second_half: f64,
    /// `|first - second| / max(first, second)`.
    pub stability: f64,
}

/// Random quadruple: uniform in the window, or a jittered rectangle with
/// one side along the axis and the other across the link.
fn sample_quadruple<R: Rng + ?Sized>(c: &ConeSpec, window: f64, clustered: bool, rng: &mut R) -> [UnfoldedPoint; 4] {
    let pt = |t: f64, theta: LinkPoint| UnfoldedPoint { t, theta };
    if !clustered {
        let mut one = || pt(rng.random_range(-window..window), c.random_link_point(rng));
        return [one(), one(), one(), one()];
    }
    let t0 = rng.random_range(-window..window);
    let side = rng.random_range(0.0..2.0 * PI);
    let theta = c.random_link_point(rng);
    let away = c.random_link_point(rng);
    let far = theta.antipode().geodesic_towards(&away, rng.random_range(0.0..0.05));
    let mut jitter = || rng.random_range(-0.02..0.02);
    [
        pt(t0 + jitter(), theta.clone()),
        pt(t0 + jitter(), far.clone()),
        pt(t0 + side + jitter(), far),
        pt(t0 + side + jitter(), theta),
    ]
}

/// Four-point delta over `count` quadruples, alternating uniform and
/// clustered samples.
pub fn gromov_delta_estimate<R: Rng + ?Sized>(c: &ConeSpec, count: usize, window: f64, rng: &mut R) -> Result<DeltaReport> {
    if count < 1000 {
        return Err(Error::InvalidInput(format!("need at least 1000 quadruples, got {count}")));
    }
    let mut halves = [0.0f64; 2];
    for i in 0..count {
        let q = sample_quadruple(c, window, i % 2 == 1, rng);
        let d = four_point_delta(c, &q);
        let h = usize::from(i >= count / 2);
        halves[h] = halves[h].max(d);
    }
    let delta_hat = halves[0].max(halves[1]);
    Ok(DeltaReport {
        count,
        delta_hat,
        first_half: halves[0],
        second_half: halves[1],
        stability: (halves[0] - halves[1]).abs() / delta_hat.max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn distance_examples() {
        let c = ConeSpec::simons();
        let th = c.north();
        let x = UnfoldedPoint { t: 0.0, theta: th.clone() };
        let y = UnfoldedPoint { t: 1.0, theta: th.clone() };
        assert!((unfolded_distance(&c, &x, &y) - c.a).abs() < 1e-15);
        let z = UnfoldedPoint { t: 0.0, theta: th.antipode() };
        assert!((unfolded_distance(&c, &x, &z) - 6f64.sqrt() * PI).abs() < 1e-12);
    }

    #[test]
    fn distance_matches_polyline_length() {
        let c = ConeSpec::simons();
        let mut rng = seeded_rng(4);
        for _ in 0..20 {
            let x = UnfoldedPoint { t: rng.random_range(-3.0..3.0), theta: c.random_link_point(&mut rng) };
            let y = UnfoldedPoint { t: rng.random_range(-3.0..3.0), theta: c.random_link_point(&mut rng) };
            let d = unfolded_distance(&c, &x, &y);
            let l = unfolded_polyline_length(&c, &x, &y, 4000);
            assert!((l - d).abs() < 1e-6 * d.max(1.0), "{l} vs {d}");
        }
    }

    #[test]
    fn axial_quadruples_have_zero_delta() {
        let c = ConeSpec::simons();
        let th = c.north();
        let q = [0.0, 1.5, -2.0, 7.0].map(|t| UnfoldedPoint { t, theta: th.clone() });
        assert!(four_point_delta(&c, &q).abs() < 1e-12);
    }

    #[test]
    fn delta_estimate_bounds_and_stability() {
        let c = ConeSpec::simons();
        let a = c.a;
        let r1 = gromov_delta_estimate(&c, 20_000, 20.0, &mut seeded_rng(1)).unwrap();
        let r2 = gromov_delta_estimate(&c, 40_000, 20.0, &mut seeded_rng(2)).unwrap();
        for r in [r1, r2] {
            assert!(r.delta_hat >= a && r.delta_hat <= a * (PI + 0.5), "{r:?}");
            assert!(r.stability < 0.05);
        }
        assert!((r1.delta_hat - r2.delta_hat).abs() < 0.05 * r1.delta_hat);
        assert!(gromov_delta_estimate(&c, 10, 20.0, &mut seeded_rng(1)).is_err());
    }

    proptest! {
        #[test]
        fn shift_invariance(seed in 0u64..500, shift in -30.0f64..30.0) {
            let c = ConeSpec::simons();
            let mut rng = seeded_rng(seed);
            let x = UnfoldedPoint { t: rng.random_range(-5.0..5.0), theta: c.random_link_point(&mut rng) };
            let y = UnfoldedPoint { t: rng.random_range(-5.0..5.0), theta: c.random_link_point(&mut rng) };
            let xs = UnfoldedPoint { t: x.t + shift, ..x.clone() };
            let ys = UnfoldedPoint { t: y.t + shift, ..y.clone() };
            let d = unfolded_distance(&c, &x, &y);
            prop_assert!((unfolded_distance(&c, &xs, &ys) - d).abs() < 1e-12 * d.max(1.0));
            let back = UnfoldedPoint::from_cone(&x.to_cone());
            prop_assert!((back.t - x.t).abs() < 1e-12);
        }
    }
}
