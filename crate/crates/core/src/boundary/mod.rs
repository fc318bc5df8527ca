//! Boundary theory at the tip and at infinity, computed on the hyperbolic
//! unfolding. For a cone the rescaled metric `<A>^2 g` is the cylinder
//! `a^2 (dt^2 + g_link)`, so the boundary points reduce to the two ends
//! `t -> -inf` and `t -> +inf`.

mod chains;
mod martin;
mod solutions;
mod unfolding;

pub use chains::{build_phi_chain, ChainCheck, PhiChain};
pub use martin::{
    dirichlet_hypotheses, fatou_atomic, martin_kernel, martin_representation_fit, pencil_tube_check, FatouReport,
    HypothesisReport, MartinConfig, MartinEstimate, PencilTubeReport, RepresentationFit,
};
pub use solutions::{
    bhp_verify, green_domination, oscillation_decay, sample_vanishing_solution, BhpReport, DominationReport,
    OscillationTrace, SamplerConfig, ShellStats, VanishingSolution, VanishingTerm,
};
pub use unfolding::{
    four_point_delta, gromov_delta_estimate, unfolded_distance, unfolded_polyline_length, DeltaReport, UnfoldedPoint,
};

use serde::{Deserialize, Serialize};

/// The two ends of the cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryPoint {
    Tip,
    Infinity,
}

impl BoundaryPoint {
    /// Depth coordinate: `r` at the tip, `1/r` at infinity; it tends to 0
    /// toward the boundary point.
    pub fn depth(self, r: f64) -> f64 {
        match self {
            BoundaryPoint::Tip => r,
            BoundaryPoint::Infinity => 1.0 / r,
        }
    }

    pub fn radius_from_depth(self, rho: f64) -> f64 {
        self.depth(rho)
    }
}
