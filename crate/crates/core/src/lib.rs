//! Numerical laboratory for the expanding inverse curvature flow
//! `dX/dt = ((n-2)/(2(n-1))) (sigma_1/sigma_2) nu` acting on star-shaped,
//! two-convex hypersurfaces of hyperbolic space `H^n`.
//!
//! The crate is organized around the objects the flow argument manipulates:
//!
//! * [`symfun`] - elementary symmetric curvature functions, Newton tensors,
//!   Garding cones, Newton-MacLaurin inequalities.
//! * [`hypgeom`] - radial-graph geometry over `S^{n-1}`: warp factors,
//!   principal curvatures, quadrature, area/`sigma_m` functionals and the
//!   curvature-inequality margins.
//! * [`shapes`] - seeded initial-data library (spheres, cosine bumps,
//!   band-limited random graphs).
//! * [`flow`] - explicit time integration of the flow in graph form, with
//!   monitor recording, evolution-identity residuals and decay fits.
//! * [`sobolev`] - sharp Sobolev (Beckner) margins on the round sphere and
//!   the late-time expansion cross-check.
//! * [`report`] - monitor series persistence (CSV/JSON/SVG) and verdicts.
//!
//! All kernels are generic over the float type via [`Scalar`]; the suites and
//! binaries run at [`Real`] precision.

// `!(x > y)` guards are used deliberately: they also trip on NaN, which a
// plain `x <= y` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod flow;
pub mod hypgeom;
pub mod report;
pub mod scalar;
pub mod shapes;
pub mod sobolev;
pub mod symfun;

pub use scalar::Scalar;

/// Scalar type used by the verification suites and the CLI.
pub type Real = f64;

/// Radial profile at suite precision.
pub type RealProfile = hypgeom::RadialProfile<Real>;

/// Curvature field at suite precision.
pub type RealCurvatureField = hypgeom::CurvatureField<Real>;

/// Flow state at suite precision.
pub type RealFlowState = flow::FlowState<Real>;
