//! Numerical potential theory on singular area-minimizing cones.
//!
//! The cones handled here are cones over products of round spheres
//! `S^p(r1) x S^q(r2)`, the prototypes being the Simons cone `C_{3,3}` and
//! `C_{2,4}`. On these cones the curvature scale `<A> = a/r` is explicit, the
//! conformally rescaled metric `<A>^2 g` is the metric cylinder
//! `a^2 (dt^2 + g_link)` with `t = log r`, and every operator
//! `L_lambda = -Delta - c_A |A|^2 - lambda <A>^2` separates into link modes
//! with constant-coefficient radial problems in `t`.
//!
//! Modules:
//! - [`geometry`]: cone catalog, intrinsic distance, curvature scale,
//!   pencils, Lipschitz and uniformity certificates.
//! - [`spectrum`]: link eigenmodes and Gegenbauer projection kernels.
//! - [`radial`]: indicial roots, adaptedness, mode-sum Green's functions.
//! - [`spectral`]: Dirichlet eigenvalues on log-annuli, Hardy quotients,
//!   Sobolev norms, criticality trichotomy.
//! - [`boundary`]: unfolded metric, Gromov delta, Phi-chains, boundary
//!   Harnack, Martin kernels and Fatou limits.

// `!(x < y)` is used on purpose so that NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod boundary;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod radial;
pub mod report;
pub mod spectral;
pub mod spectrum;

pub use error::{Error, Result};
pub use geometry::{ConePoint, ConeSpec, LinkPoint, Pencil, PencilApex, STransform};
pub use radial::{GreenEvaluator, IndicialRoots, OperatorSpec};
pub use spectrum::LinkMode;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator used by every sampler in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
