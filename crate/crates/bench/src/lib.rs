//! Shared fixtures for the benchmarks.

use conelab_core::geometry::make_cone;
use conelab_core::radial::GreenConfig;
use conelab_core::{ConePoint, ConeSpec, GreenEvaluator, LinkPoint, OperatorSpec};

pub fn simons() -> ConeSpec {
    make_cone(3, 3, None).expect("the Simons cone is valid")
}

pub fn laplace_green() -> GreenEvaluator {
    GreenEvaluator::new(simons(), OperatorSpec::laplace(), GreenConfig::default()).expect("Laplacian is subcritical")
}

/// A well separated pair at radii 1 and 4.
pub fn pair() -> (ConePoint, ConePoint) {
    let x = ConePoint { r: 1.0, theta: LinkPoint::from_polar(3, 3, 0.3, 1.1) };
    let y = ConePoint { r: 4.0, theta: LinkPoint::from_polar(3, 3, 2.0, 0.4) };
    (x, y)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_pair_evaluates() {
        let (x, y) = super::pair();
        assert!(super::laplace_green().green(&x, &y).unwrap().value > 0.0);
    }
}
