//! Integral functionals of a hypersurface: area, total `sigma_m`, the
//! normalized deficit `Q`, and the sharp-inequality margins.

use super::curvature::{curvature_from_profile, CurvatureField};
use super::grid::Grid;
use super::profile::RadialProfile;
use super::GeomError;
use crate::scalar::Scalar;

/// Area `omega_{n-1}` of the unit sphere `S^{n-1}` in `R^n`, by the closed
/// forms for integer and half-integer Gamma values.
pub fn sphere_area_constant<S: Scalar>(n: usize) -> S {
    assert!(n >= 2, "sphere area constant defined for n >= 2");
    let pi = S::PI();
    if n.is_multiple_of(2) {
        // 2 pi^m / (m-1)!
        let m = n / 2;
        let fact: f64 = (1..m).map(|i| i as f64).product();
        S::cst(2.0) * pi.powi(m as i32) / S::cst(fact)
    } else {
        // 2 pi^m 4^m m! / (2m)!
        let m = (n - 1) / 2;
        let num: f64 = 4f64.powi(m as i32) * (1..=m).map(|i| i as f64).product::<f64>();
        let den: f64 = (1..=2 * m).map(|i| i as f64).product();
        S::cst(2.0) * pi.powi(m as i32) * S::cst(num / den)
    }
}

/// Surface area `|Sigma|`.
pub fn area<S: Scalar>(p: &RadialProfile<S>) -> Result<S, GeomError> {
    let field = curvature_from_profile(p)?;
    Ok(area_of_field(p.grid(), &field))
}

/// Total curvature integral `int sigma_m dmu`.
pub fn total_sigma<S: Scalar>(p: &RadialProfile<S>, m: usize) -> Result<S, GeomError> {
    let n = p.n();
    if m > n - 1 {
        return Err(GeomError::SigmaOrderOutOfRange { m, max: n - 1 });
    }
    let field = curvature_from_profile(p)?;
    Ok(total_sigma_of_field(p.grid(), &field, m))
}

/// Normalized deficit `Q = |Sigma|^{-(n-3)/(n-1)} (int sigma_2 dmu - c_n |Sigma|)`
/// with `c_n = (n-1)(n-2)/2`; at n = 3 the exponent vanishes and
/// `Q = int sigma_2 - |Sigma|`.
pub fn q_value<S: Scalar>(p: &RadialProfile<S>) -> Result<S, GeomError> {
    let field = curvature_from_profile(p)?;
    let a = area_of_field(p.grid(), &field);
    let s2 = total_sigma_of_field(p.grid(), &field, 2);
    Ok(q_of(p.n(), a, s2))
}

/// Margin of `int sigma_2 dmu >= c_n (omega^{2/(n-1)} |Sigma|^{(n-3)/(n-1)} + |Sigma|)`,
/// nonnegative for star-shaped two-convex hypersurfaces and zero exactly on
/// geodesic spheres.
pub fn main_inequality_margin<S: Scalar>(p: &RadialProfile<S>) -> Result<S, GeomError> {
    let field = curvature_from_profile(p)?;
    main_margin_of_field(p.grid(), &field)
}

/// Margins of the two mean-convexity inequalities: the weighted Minkowski
/// inequality (margin of
/// `int (lambda' sigma_1 - (n-1) lambda/v) dmu >= (n-1) omega^{1/(n-1)} |Sigma|^{(n-2)/(n-1)}`,
/// using that the ambient gradient of `lambda'` pairs with the normal as
/// `lambda/v`) and the mean-curvature area bound (margin of
/// `int lambda' sigma_1 dmu >= (n-1) omega ((|Sigma|/omega)^{(n-2)/(n-1)} + (|Sigma|/omega)^{n/(n-1)})`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxiliaryMargins<S> {
    pub minkowski: S,
    pub mean_area: S,
}

pub fn auxiliary_inequality_margins<S: Scalar>(
    p: &RadialProfile<S>,
) -> Result<AuxiliaryMargins<S>, GeomError> {
    let field = curvature_from_profile(p)?;
    auxiliary_margins_of_field(p.grid(), &field)
}

// --- field-level variants (used by the flow monitors to avoid recomputation) ---

pub(crate) fn area_of_field<S: Scalar>(grid: &Grid<S>, field: &CurvatureField<S>) -> S {
    grid.integrate_round_with(|j| field.weight[j])
}

pub(crate) fn total_sigma_of_field<S: Scalar>(
    grid: &Grid<S>,
    field: &CurvatureField<S>,
    m: usize,
) -> S {
    grid.integrate_round_with(|j| field.sigma_at(j, m) * field.weight[j])
}

pub(crate) fn q_of<S: Scalar>(n: usize, area: S, sigma2_total: S) -> S {
    let c_n = S::cst((n - 1) as f64 * (n - 2) as f64 / 2.0);
    let expo = S::cst((n - 3) as f64 / (n - 1) as f64);
    (sigma2_total - c_n * area) * area.powf(-expo)
}

pub(crate) fn main_margin_of_field<S: Scalar>(
    grid: &Grid<S>,
    field: &CurvatureField<S>,
) -> Result<S, GeomError> {
    let nodes = field.two_convexity_violations();
    if !nodes.is_empty() {
        return Err(GeomError::NotTwoConvex { nodes });
    }
    let n = field.ambient_dim();
    let a = area_of_field(grid, field);
    let s2 = total_sigma_of_field(grid, field, 2);
    let c_n = S::cst((n - 1) as f64 * (n - 2) as f64 / 2.0);
    let omega = sphere_area_constant::<S>(n);
    let expo = S::cst((n - 3) as f64 / (n - 1) as f64);
    Ok(s2 - c_n * (omega.powf(S::cst(2.0 / (n - 1) as f64)) * a.powf(expo) + a))
}

pub(crate) fn auxiliary_margins_of_field<S: Scalar>(
    grid: &Grid<S>,
    field: &CurvatureField<S>,
) -> Result<AuxiliaryMargins<S>, GeomError> {
    let nodes = field.mean_convexity_violations();
    if !nodes.is_empty() {
        return Err(GeomError::NotMeanConvex { nodes });
    }
    let n = field.ambient_dim();
    let nm1 = S::cst((n - 1) as f64);
    let a = area_of_field(grid, field);
    let omega = sphere_area_constant::<S>(n);

    // <grad lambda', nu> = lambda/v since grad lambda' = lambda d_r and <d_r, nu> = 1/v
    let weighted = grid.integrate_round_with(|j| {
        (field.lambda_prime[j] * field.sigma_at(j, 1) - nm1 * field.lambda[j] / field.v[j])
            * field.weight[j]
    });
    let plain = grid
        .integrate_round_with(|j| field.lambda_prime[j] * field.sigma_at(j, 1) * field.weight[j]);

    let e_min = S::cst((n - 2) as f64 / (n - 1) as f64);
    let minkowski = weighted - nm1 * omega.powf(S::cst(1.0 / (n - 1) as f64)) * a.powf(e_min);
    let ratio = a / omega;
    let mean_area =
        plain - nm1 * omega * (ratio.powf(e_min) + ratio.powf(S::cst(n as f64 / (n - 1) as f64)));
    Ok(AuxiliaryMargins { minkowski, mean_area })
}
