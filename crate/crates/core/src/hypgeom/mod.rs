//! Geometry of star-shaped radial graphs in hyperbolic space.
//!
//! A hypersurface is stored as a radius function over the round sphere
//! `S^{n-1}` (a [`RadialProfile`]); with `lambda(r) = sinh r` the induced
//! metric and second fundamental form of the graph are
//!
//! ```text
//! g_ij = lambda^2 (sigma_ij + phi_i phi_j)
//! h_ij = (lambda'/(v lambda)) g_ij - (lambda/v) phi_ij
//! ```
//!
//! where `phi` has `grad phi = grad r / lambda` and `v = sqrt(1 + |grad phi|^2)`.
//! The antiderivative behind `phi` is never evaluated; only its derivatives
//! enter, which are unambiguous.
//!
//! [`curvature_from_profile`] turns a profile into a [`CurvatureField`]
//! (principal curvatures plus the area density `lambda^{n-1} v`), and the
//! functionals layer integrates area, `sigma_m`, the normalized deficit `Q`,
//! and the curvature-inequality margins over it.

pub mod curvature;
pub mod functionals;
pub mod grid;
pub mod profile;

pub use curvature::{curvature_from_profile, CurvatureField};
pub use functionals::{
    area, auxiliary_inequality_margins, main_inequality_margin, q_value, sphere_area_constant,
    total_sigma, AuxiliaryMargins,
};
pub use grid::{Grid, Representation};
pub use profile::RadialProfile;

/// Largest admissible radius; `sinh^{n-1} r` overflows `f64` comfortably
/// below this for n <= 8, so anything larger is treated as a blowup.
pub const RADIUS_CAP: f64 = 25.0;

/// Supported ambient dimensions.
pub const DIMENSION_RANGE: std::ops::RangeInclusive<usize> = 3..=8;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeomError {
    #[error("ambient dimension n={n} outside supported range 3..=8")]
    InvalidDimension { n: usize },
    #[error("full-sphere grids exist only for n=3, got n={n}")]
    FullSphereDimension { n: usize },
    #[error("polar resolution {n_rho} too coarse; need at least 8 nodes")]
    GridTooCoarse { n_rho: usize },
    #[error("longitude count {n_psi} must be even and at least 8")]
    BadLongitudeCount { n_psi: usize },
    #[error("expected {expected} radial values, got {got}")]
    WrongValueCount { expected: usize, got: usize },
    #[error("radius at node {node} is {value}, but must be positive")]
    NonPositiveRadius { node: usize, value: f64 },
    #[error("radius at node {node} is not finite")]
    NonFiniteRadius { node: usize },
    #[error("radius {value} at node {node} exceeds the overflow cap {cap}")]
    RadiusOverflow { node: usize, value: f64, cap: f64 },
    #[error("curvature at node {node} is not finite")]
    NonFiniteCurvature { node: usize },
    #[error("sigma_{m} requested, valid orders are 0..={max}")]
    SigmaOrderOutOfRange { m: usize, max: usize },
    #[error("two-convexity violated at {} node(s), first offenders: {:?}", nodes.len(), preview(nodes))]
    NotTwoConvex { nodes: Vec<usize> },
    #[error("mean convexity violated at {} node(s), first offenders: {:?}", nodes.len(), preview(nodes))]
    NotMeanConvex { nodes: Vec<usize> },
}

fn preview(nodes: &[usize]) -> &[usize] {
    &nodes[..nodes.len().min(8)]
}
