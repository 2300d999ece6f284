//! Sharp Sobolev (Beckner) margins on the round sphere and the late-time
//! expansion cross-check for flow states.
//!
//! For positive `f` on `S^{n-1}` the inequality
//!
//! ```text
//! int f^{n-3} + (n-3)/(n-1) int f^{n-5} |grad f|^2
//!     >= omega^{2/(n-1)} (int f^{n-1})^{(n-3)/(n-1)}
//! ```
//!
//! holds with equality at constants; substituting `w = f^{(n-3)/2}` gives the
//! equivalent H^1-Sobolev form. Discrete margins use the *discrete* total
//! round measure as `omega`, so the constant-function equality case is exact
//! at any resolution instead of carrying the quadrature bias of the odd-n
//! midpoint rule.

use crate::flow::FlowState;
use crate::hypgeom::curvature::full_sphere_gradient;
use crate::hypgeom::functionals::{area_of_field, total_sigma_of_field};
use crate::hypgeom::{curvature_from_profile, GeomError, Grid, Representation};
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SobolevError {
    #[error("sphere function must be positive; value at node {node} is {value}")]
    NonPositive { node: usize, value: f64 },
    #[error("sphere function value at node {node} is not finite")]
    NonFinite { node: usize },
    #[error("the w-substitution needs n >= 4, got n = {n}")]
    DimensionTooSmall { n: usize },
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Positive axisymmetric function sampled on the staggered polar grid.
#[derive(Clone, Debug)]
pub struct SphereFunction<S> {
    grid: Grid<S>,
    values: Vec<S>,
}

impl<S: Scalar> SphereFunction<S> {
    pub fn new(n: usize, n_rho: usize, values: Vec<S>) -> Result<Self, SobolevError> {
        let grid = Grid::axisymmetric(n, n_rho)?;
        if values.len() != grid.node_count() {
            return Err(SobolevError::Geometry(GeomError::WrongValueCount {
                expected: grid.node_count(),
                got: values.len(),
            }));
        }
        for (node, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SobolevError::NonFinite { node });
            }
            if v <= S::zero() {
                return Err(SobolevError::NonPositive {
                    node,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(rho)` on the staggered grid.
    pub fn from_fn(
        n: usize,
        n_rho: usize,
        f: impl Fn(S) -> S,
    ) -> Result<Self, SobolevError> {
        let grid = Grid::axisymmetric(n, n_rho)?;
        let values = (0..n_rho).map(|j| f(grid.rho(j))).collect();
        Self::new(n, n_rho, values)
    }

    pub fn constant(n: usize, n_rho: usize, c: S) -> Result<Self, SobolevError> {
        Self::new(n, n_rho, vec![c; n_rho])
    }

    pub fn n(&self) -> usize {
        self.grid.ambient_dim()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

/// Both sides of a sharp-Sobolev check and their difference.
#[derive(Clone, Copy, Debug)]
pub struct BecknerMargin<S> {
    pub lhs: S,
    pub rhs: S,
    pub margin: S,
}

/// Margin of the f-form inequality. Nonnegative for every positive `f`; at
/// n = 3 all exponents degenerate and both sides equal the sphere measure.
pub fn beckner_margin<S: Scalar>(f: &SphereFunction<S>) -> BecknerMargin<S> {
    let n = f.n();
    let grid = &f.grid;
    let omega = grid.round_measure_total();
    let vals = &f.values;

    let int_fk = grid.integrate_round_with(|j| vals[j].powi(n as i32 - 3));
    let coef = S::cst((n - 3) as f64 / (n - 1) as f64);
    let lhs = if n == 3 {
        int_fk
    } else {
        let grad = grid.axisym_d1(vals);
        let int_grad = grid
            .integrate_round_with(|j| vals[j].powi(n as i32 - 5) * grad[j] * grad[j]);
        int_fk + coef * int_grad
    };
    let int_fn = grid.integrate_round_with(|j| vals[j].powi(n as i32 - 1));
    let rhs = omega.powf(S::cst(2.0 / (n - 1) as f64)) * int_fn.powf(coef);
    BecknerMargin { lhs, rhs, margin: lhs - rhs }
}

/// Margin of the equivalent H^1 form after substituting `w = f^{(n-3)/2}`:
/// `4/((n-1)(n-3)) int |grad w|^2 + int w^2 >= omega^{2/(n-1)} (int w^{2(n-1)/(n-3)})^{(n-3)/(n-1)}`.
///
/// The gradient acts on the sampled `w` directly, so the difference from
/// [`beckner_margin`] measures pure differentiation error.
pub fn beckner_w_margin<S: Scalar>(f: &SphereFunction<S>) -> Result<BecknerMargin<S>, SobolevError> {
    let n = f.n();
    if n < 4 {
        return Err(SobolevError::DimensionTooSmall { n });
    }
    let grid = &f.grid;
    let omega = grid.round_measure_total();
    let half_k = S::cst((n - 3) as f64 / 2.0);
    let w: Vec<S> = f.values.iter().map(|v| v.powf(half_k)).collect();
    let grad = grid.axisym_d1(&w);

    let coef = S::cst(4.0 / ((n - 1) as f64 * (n - 3) as f64));
    let lhs = coef * grid.integrate_round_with(|j| grad[j] * grad[j])
        + grid.integrate_round_with(|j| w[j] * w[j]);
    let p = S::cst(2.0 * (n - 1) as f64 / (n - 3) as f64);
    let int_wp = grid.integrate_round_with(|j| w[j].powf(p));
    let rhs = omega.powf(S::cst(2.0 / (n - 1) as f64))
        * int_wp.powf(S::cst((n - 3) as f64 / (n - 1) as f64));
    Ok(BecknerMargin { lhs, rhs, margin: lhs - rhs })
}

/// Ratio of the exact deficit `int sigma_2 dmu - c_n |Sigma|` to the leading
/// term of its late-time expansion,
/// `c_n int (lambda^{n-3} + (n-3)/(n-1) lambda^{n-5} |grad lambda|^2) dvol`,
/// with `lambda = sinh r` read off the state's profile. Tends to 1 along a
/// flow; equals 1 identically on geodesic spheres.
pub fn asymptotic_limit_ratio<S: Scalar>(state: &FlowState<S>) -> S {
    let profile = state.profile();
    let grid = profile.grid();
    let n = grid.ambient_dim();
    let field = curvature_from_profile(profile).expect("flow states hold valid profiles");
    let c_n = S::cst((n - 1) as f64 * (n - 2) as f64 / 2.0);
    let exact = total_sigma_of_field(grid, &field, 2) - c_n * area_of_field(grid, &field);

    let coef = S::cst((n - 3) as f64 / (n - 1) as f64);
    let grad_sq: Vec<S> = match grid.representation() {
        Representation::Axisymmetric => {
            let rp = grid.axisym_d1(profile.values());
            (0..grid.node_count())
                .map(|j| {
                    let g = field.lambda_prime[j] * rp[j];
                    g * g
                })
                .collect()
        }
        Representation::FullSphere => {
            let (d_rho, d_psi) = full_sphere_gradient(grid, profile.values());
            (0..grid.node_count())
                .map(|j| {
                    let s = grid.sin_rho()[grid.polar_index(j)];
                    let lp = field.lambda_prime[j];
                    lp * lp * (d_rho[j] * d_rho[j] + d_psi[j] * d_psi[j] / (s * s))
                })
                .collect()
        }
    };
    let leading = c_n
        * grid.integrate_round_with(|j| {
            let lam = field.lambda[j];
            let mut term = lam.powi(n as i32 - 3);
            if n != 3 {
                term += coef * lam.powi(n as i32 - 5) * grad_sq[j];
            }
            term
        });
    exact / leading
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowState;
    use crate::hypgeom::RadialProfile;

    #[test]
    fn constants_sit_exactly_on_the_equality_case() {
        for n in 3..=8usize {
            for &c in &[0.5f64, 1.0, 2.0] {
                let f = SphereFunction::constant(n, 400, c).unwrap();
                let m = beckner_margin(&f);
                assert!(
                    m.margin.abs() < 1e-10,
                    "n={n} c={c}: margin {:e}",
                    m.margin
                );
            }
        }
    }

    #[test]
    fn n3_is_identically_equality() {
        let f = SphereFunction::from_fn(3, 256, |rho: f64| 1.0 + 0.4 * rho.sin()).unwrap();
        let m = beckner_margin(&f);
        let omega = 4.0 * std::f64::consts::PI;
        assert!((m.lhs / omega - 1.0).abs() < 1e-8);
        assert!((m.rhs / omega - 1.0).abs() < 1e-8);
        assert!(m.margin.abs() < 1e-12);
    }

    #[test]
    fn perturbed_functions_have_positive_margin() {
        let f = SphereFunction::from_fn(5, 400, |rho: f64| 1.0 + 0.1 * rho.cos()).unwrap();
        let m = beckner_margin(&f);
        assert!(m.margin > 0.0, "margin {:e}", m.margin);
    }

    #[test]
    fn unit_w_reduces_to_the_sphere_measure() {
        let f = SphereFunction::constant(5, 256, 1.0).unwrap();
        let m = beckner_w_margin(&f).unwrap();
        let omega = crate::hypgeom::sphere_area_constant::<f64>(5);
        assert!((m.lhs / omega - 1.0).abs() < 1e-9);
        assert!((m.rhs / omega - 1.0).abs() < 1e-9);
    }

    #[test]
    fn w_form_needs_n_at_least_4() {
        let f = SphereFunction::constant(3, 64, 1.0).unwrap();
        assert_eq!(
            beckner_w_margin(&f).unwrap_err(),
            SobolevError::DimensionTooSmall { n: 3 }
        );
    }

    #[test]
    fn f_form_and_w_form_agree_to_differentiation_error() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [5usize, 6] {
            for _ in 0..10 {
                let amp: f64 = rng.gen_range(0.05..0.4);
                let c1: f64 = rng.gen_range(-1.0..1.0);
                let c2: f64 = rng.gen_range(-1.0..1.0);
                let norm = c1.abs() + c2.abs();
                let f = SphereFunction::from_fn(n, 400, |rho: f64| {
                    1.0 + amp * (c1 * rho.cos() + c2 * (2.0 * rho).cos()) / norm
                })
                .unwrap();
                let mf = beckner_margin(&f).margin;
                let mw = beckner_w_margin(&f).unwrap().margin;
                assert!(
                    (mf - mw).abs() < 1e-8,
                    "n={n}: f-form {mf:e} vs w-form {mw:e}"
                );
            }
        }
    }

    #[test]
    fn lowest_nonneutral_mode_scales_quadratically() {
        // cos(2 rho) carries degree-2 spherical-harmonic content, so the
        // margin is quadratic in the amplitude
        let n = 5;
        let margins: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&eps| {
                beckner_margin(
                    &SphereFunction::from_fn(n, 400, |rho: f64| 1.0 + eps * (2.0 * rho).cos())
                        .unwrap(),
                )
                .margin
            })
            .collect();
        let slope = (margins[0] / margins[2]).ln() / (1e-1f64 / 1e-3).ln();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn tilt_mode_margin_is_quartic() {
        // cos(rho) is a degree-1 harmonic: a conformal direction along which
        // the sharp inequality stays saturated to second order, so its
        // deficit is quartic, not quadratic
        let n = 5;
        let margins: Vec<f64> = [1e-1, 1e-2]
            .iter()
            .map(|&eps| {
                beckner_margin(
                    &SphereFunction::from_fn(n, 400, |rho: f64| 1.0 + eps * rho.cos()).unwrap(),
                )
                .margin
            })
            .collect();
        assert!(margins.iter().all(|m| *m > 0.0));
        let slope = (margins[0] / margins[1]).ln() / 10.0f64.ln();
        assert!((slope - 4.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn asymptotic_ratio_is_one_on_geodesic_spheres() {
        for n in [4usize, 5, 8] {
            for &c in &[1.0f64, 4.0] {
                let p = RadialProfile::constant(n, 256, c).unwrap();
                let state = FlowState::new(0.0, p).unwrap();
                let ratio = asymptotic_limit_ratio(&state);
                assert!((ratio - 1.0).abs() < 1e-9, "n={n} c={c}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn nonpositive_functions_are_rejected() {
        assert!(matches!(
            SphereFunction::new(5, 64, vec![1.0; 63]),
            Err(SobolevError::Geometry(GeomError::WrongValueCount { .. }))
        ));
        let mut vals = vec![1.0; 64];
        vals[10] = 0.0;
        assert!(matches!(
            SphereFunction::new(5, 64, vals),
            Err(SobolevError::NonPositive { node: 10, .. })
        ));
    }
}
