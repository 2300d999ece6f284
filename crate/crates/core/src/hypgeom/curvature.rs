//! Principal curvatures and area density of a radial graph.

use super::grid::{d1_into, d2_into, extend_reflect_into, Grid, Representation};
use super::profile::RadialProfile;
use super::{GeomError, RADIUS_CAP};
use crate::scalar::Scalar;

/// Pointwise curvature data derived from a [`RadialProfile`].
///
/// `kappa_a` is the polar principal curvature (multiplicity 1); `kappa_b`
/// carries multiplicity `n - 2` (on axisymmetric grids it is the common
/// curvature of the rotational directions, on the full-sphere grid the second
/// eigenvalue). `weight` is the area density `lambda^{n-1} v` relative to the
/// round measure, so surface integrals are round-measure integrals of
/// `weight * (...)`.
#[derive(Clone, Debug)]
pub struct CurvatureField<S> {
    n: usize,
    pub kappa_a: Vec<S>,
    pub kappa_b: Vec<S>,
    pub lambda: Vec<S>,
    pub lambda_prime: Vec<S>,
    pub v: Vec<S>,
    pub weight: Vec<S>,
}

impl<S: Scalar> CurvatureField<S> {
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.kappa_a.len()
    }

    /// Graph gradient norm `|grad phi|` at a node.
    pub fn grad_phi_norm(&self, node: usize) -> S {
        (self.v[node] * self.v[node] - S::one()).max(S::zero()).sqrt()
    }

    /// `sigma_m` of the principal curvatures at a node, using the two-value
    /// closed form with multiplicities `(1, n-2)`; orders above `n - 1`
    /// vanish identically.
    pub fn sigma_at(&self, node: usize, m: usize) -> S {
        sigma_two_value(self.kappa_a[node], self.kappa_b[node], self.n, m)
    }

    /// Largest deviation of any principal curvature from 1.
    pub fn max_umbilic_deviation(&self) -> S {
        let one = S::one();
        self.kappa_a
            .iter()
            .zip(&self.kappa_b)
            .fold(S::zero(), |acc, (a, b)| {
                acc.max((*a - one).abs()).max((*b - one).abs())
            })
    }

    /// Nodes where `(sigma_1, sigma_2)` fails to be strictly positive.
    pub fn two_convexity_violations(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&j| {
                !(self.sigma_at(j, 1) > S::zero() && self.sigma_at(j, 2) > S::zero())
            })
            .collect()
    }

    /// Nodes where the mean curvature `sigma_1` fails to be positive.
    pub fn mean_convexity_violations(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&j| !(self.sigma_at(j, 1) > S::zero()))
            .collect()
    }
}

/// `sigma_m` of the tuple `(a, b, b, ..., b)` with `n - 2` copies of `b`.
pub(crate) fn sigma_two_value<S: Scalar>(a: S, b: S, n: usize, m: usize) -> S {
    if m == 0 {
        return S::one();
    }
    let reps = n - 2;
    let mut total = S::zero();
    if m - 1 <= reps {
        total += S::cst(binomial(reps, m - 1)) * a * b.powi(m as i32 - 1);
    }
    if m <= reps {
        total += S::cst(binomial(reps, m)) * b.powi(m as i32);
    }
    total
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Computes the curvature field of a profile.
///
/// Axisymmetric grids use the closed forms
///
/// ```text
/// kappa_a = lambda'/(lambda v) - phi''/(lambda v^3)
/// kappa_b = lambda'/(lambda v) - cot(rho) phi'/(lambda v)
/// ```
///
/// with `phi' = r'/lambda` and derivatives of `r` taken by fourth-order
/// centered differences through reflection ghosts. Full-sphere grids assemble
/// the frame metric and shape operator and take 2x2 eigenvalues.
pub fn curvature_from_profile<S: Scalar>(
    p: &RadialProfile<S>,
) -> Result<CurvatureField<S>, GeomError> {
    field_from_parts(p.grid(), p.values())
}

pub(crate) fn field_from_parts<S: Scalar>(
    grid: &Grid<S>,
    r: &[S],
) -> Result<CurvatureField<S>, GeomError> {
    debug_assert_eq!(r.len(), grid.node_count());
    match grid.representation() {
        Representation::Axisymmetric => axisymmetric_field(grid, r),
        Representation::FullSphere => full_sphere_field(grid, r),
    }
}

fn axisymmetric_field<S: Scalar>(grid: &Grid<S>, r: &[S]) -> Result<CurvatureField<S>, GeomError> {
    let n = grid.ambient_dim();
    let n_rho = grid.n_rho();

    let mut ext = Vec::new();
    extend_reflect_into(r, &mut ext);
    let mut rp = vec![S::zero(); n_rho];
    let mut rpp = vec![S::zero(); n_rho];
    d1_into(&ext, grid.inv_12h(), &mut rp);
    d2_into(&ext, grid.inv_12h2(), &mut rpp);

    let cap = S::cst(RADIUS_CAP);
    let cot = grid.cot_rho();
    let mut field = CurvatureField {
        n,
        kappa_a: vec![S::zero(); n_rho],
        kappa_b: vec![S::zero(); n_rho],
        lambda: vec![S::zero(); n_rho],
        lambda_prime: vec![S::zero(); n_rho],
        v: vec![S::zero(); n_rho],
        weight: vec![S::zero(); n_rho],
    };
    for j in 0..n_rho {
        if r[j] >= cap {
            return Err(GeomError::RadiusOverflow {
                node: j,
                value: r[j].to_f64().unwrap_or(f64::NAN),
                cap: RADIUS_CAP,
            });
        }
        let (lam, lamp) = r[j].sinh_cosh();
        let ilam = lam.recip();
        let phi_p = rp[j] * ilam;
        let phi_pp = ilam * (rpp[j] - lamp * rp[j] * phi_p);
        let v2 = S::one() + phi_p * phi_p;
        let v = v2.sqrt();
        let base = lamp * ilam / v;
        let ka = base - phi_pp * ilam / (v * v2);
        let kb = base - cot[j] * phi_p * ilam / v;
        if !(ka.is_finite() && kb.is_finite()) {
            return Err(GeomError::NonFiniteCurvature { node: j });
        }
        field.kappa_a[j] = ka;
        field.kappa_b[j] = kb;
        field.lambda[j] = lam;
        field.lambda_prime[j] = lamp;
        field.v[j] = v;
        field.weight[j] = lam.powi(n as i32 - 1) * v;
    }
    Ok(field)
}

/// Gradient of `r` on the full-sphere grid: per-node `(dr/drho, dr/dpsi)`.
pub(crate) fn full_sphere_gradient<S: Scalar>(grid: &Grid<S>, r: &[S]) -> (Vec<S>, Vec<S>) {
    let (n_rho, n_psi) = (grid.n_rho(), grid.n_psi());
    let ext = extend_rows_polar(r, n_rho, n_psi);
    let mut d_rho = vec![S::zero(); n_rho * n_psi];
    d1_rows(&ext, n_rho, n_psi, grid.inv_12h(), &mut d_rho);
    let mut d_psi = vec![S::zero(); n_rho * n_psi];
    d1_periodic(r, n_rho, n_psi, grid.inv_12h_psi(), &mut d_psi);
    (d_rho, d_psi)
}

fn full_sphere_field<S: Scalar>(grid: &Grid<S>, r: &[S]) -> Result<CurvatureField<S>, GeomError> {
    let n = grid.ambient_dim();
    debug_assert_eq!(n, 3);
    let (n_rho, n_psi) = (grid.n_rho(), grid.n_psi());
    let total = n_rho * n_psi;

    let ext = extend_rows_polar(r, n_rho, n_psi);
    let mut r_rho = vec![S::zero(); total];
    let mut r_rhorho = vec![S::zero(); total];
    d1_rows(&ext, n_rho, n_psi, grid.inv_12h(), &mut r_rho);
    d2_rows(&ext, n_rho, n_psi, grid.inv_12h2(), &mut r_rhorho);
    let mut r_psi = vec![S::zero(); total];
    let mut r_psipsi = vec![S::zero(); total];
    d1_periodic(r, n_rho, n_psi, grid.inv_12h_psi(), &mut r_psi);
    d2_periodic(r, n_rho, n_psi, grid.inv_12h2_psi(), &mut r_psipsi);
    // mixed derivative: psi-stencil applied to dr/drho (no polar ghosts needed)
    let mut r_rhopsi = vec![S::zero(); total];
    d1_periodic(&r_rho, n_rho, n_psi, grid.inv_12h_psi(), &mut r_rhopsi);

    let cap = S::cst(RADIUS_CAP);
    let mut field = CurvatureField {
        n,
        kappa_a: vec![S::zero(); total],
        kappa_b: vec![S::zero(); total],
        lambda: vec![S::zero(); total],
        lambda_prime: vec![S::zero(); total],
        v: vec![S::zero(); total],
        weight: vec![S::zero(); total],
    };
    let two = S::cst(2.0);
    let four = S::cst(4.0);
    for j in 0..n_rho {
        let s = grid.sin_rho()[j];
        let c = grid.cos_rho()[j];
        let cot = grid.cot_rho()[j];
        for i in 0..n_psi {
            let idx = j * n_psi + i;
            if r[idx] >= cap {
                return Err(GeomError::RadiusOverflow {
                    node: idx,
                    value: r[idx].to_f64().unwrap_or(f64::NAN),
                    cap: RADIUS_CAP,
                });
            }
            let (lam, lamp) = r[idx].sinh_cosh();
            let ilam = lam.recip();
            // frame components of grad phi and of the covariant Hessian
            let p1 = r_rho[idx] * ilam;
            let p2 = r_psi[idx] * ilam / s;
            let h_rr = ilam * (r_rhorho[idx] - lamp * r_rho[idx] * p1);
            let h_rp = ilam * (r_rhopsi[idx] - lamp * r_rho[idx] * r_psi[idx] * ilam)
                - cot * r_psi[idx] * ilam;
            let h_pp = ilam * (r_psipsi[idx] - lamp * r_psi[idx] * r_psi[idx] * ilam)
                + s * c * p1;
            let f11 = h_rr;
            let f12 = h_rp / s;
            let f22 = h_pp / (s * s);

            let v2 = S::one() + p1 * p1 + p2 * p2;
            let v = v2.sqrt();
            let lam2 = lam * lam;
            let g11 = lam2 * (S::one() + p1 * p1);
            let g12 = lam2 * p1 * p2;
            let g22 = lam2 * (S::one() + p2 * p2);
            let a = lamp / (v * lam);
            let lv = lam / v;
            let h11 = a * g11 - lv * f11;
            let h12 = a * g12 - lv * f12;
            let h22 = a * g22 - lv * f22;
            let det_g = g11 * g22 - g12 * g12;
            let tr = (g22 * h11 - two * g12 * h12 + g11 * h22) / det_g;
            let det = (h11 * h22 - h12 * h12) / det_g;
            // the pencil is symmetrizable, so the eigenvalues are real; clamp
            // the tiny negative discriminants produced by roundoff
            let disc = (tr * tr - four * det).max(S::zero()).sqrt();
            let half = S::cst(0.5);
            let ka = half * (tr + disc);
            let kb = half * (tr - disc);
            if !(ka.is_finite() && kb.is_finite()) {
                return Err(GeomError::NonFiniteCurvature { node: idx });
            }
            field.kappa_a[idx] = ka;
            field.kappa_b[idx] = kb;
            field.lambda[idx] = lam;
            field.lambda_prime[idx] = lamp;
            field.v[idx] = v;
            field.weight[idx] = lam2 * v;
        }
    }
    Ok(field)
}

/// Extends a row-major polar-by-longitude array with two ghost rows at each
/// pole: the formal point `(-rho, psi)` is the sphere point `(rho, psi + pi)`,
/// so ghost rows are interior rows shifted by half the longitude count.
fn extend_rows_polar<S: Copy>(r: &[S], n_rho: usize, n_psi: usize) -> Vec<S> {
    let half = n_psi / 2;
    let mut ext = Vec::with_capacity((n_rho + 4) * n_psi);
    for &row in &[1usize, 0] {
        for i in 0..n_psi {
            ext.push(r[row * n_psi + (i + half) % n_psi]);
        }
    }
    ext.extend_from_slice(r);
    for &row in &[n_rho - 1, n_rho - 2] {
        for i in 0..n_psi {
            ext.push(r[row * n_psi + (i + half) % n_psi]);
        }
    }
    ext
}

fn d1_rows<S: Scalar>(ext: &[S], n_rho: usize, n_psi: usize, inv_12h: S, out: &mut [S]) {
    let eight = S::cst(8.0);
    for j in 0..n_rho {
        for i in 0..n_psi {
            let at = |dj: usize| ext[(j + dj) * n_psi + i];
            out[j * n_psi + i] = (eight * (at(3) - at(1)) - (at(4) - at(0))) * inv_12h;
        }
    }
}

fn d2_rows<S: Scalar>(ext: &[S], n_rho: usize, n_psi: usize, inv_12h2: S, out: &mut [S]) {
    let sixteen = S::cst(16.0);
    let thirty = S::cst(30.0);
    for j in 0..n_rho {
        for i in 0..n_psi {
            let at = |dj: usize| ext[(j + dj) * n_psi + i];
            out[j * n_psi + i] =
                (sixteen * (at(3) + at(1)) - (at(4) + at(0)) - thirty * at(2)) * inv_12h2;
        }
    }
}

fn d1_periodic<S: Scalar>(r: &[S], n_rho: usize, n_psi: usize, inv_12h: S, out: &mut [S]) {
    let eight = S::cst(8.0);
    for j in 0..n_rho {
        let row = &r[j * n_psi..(j + 1) * n_psi];
        for i in 0..n_psi {
            let at = |di: isize| row[(i as isize + di).rem_euclid(n_psi as isize) as usize];
            out[j * n_psi + i] = (eight * (at(1) - at(-1)) - (at(2) - at(-2))) * inv_12h;
        }
    }
}

fn d2_periodic<S: Scalar>(r: &[S], n_rho: usize, n_psi: usize, inv_12h2: S, out: &mut [S]) {
    let sixteen = S::cst(16.0);
    let thirty = S::cst(30.0);
    for j in 0..n_rho {
        let row = &r[j * n_psi..(j + 1) * n_psi];
        for i in 0..n_psi {
            let at = |di: isize| row[(i as isize + di).rem_euclid(n_psi as isize) as usize];
            out[j * n_psi + i] = (sixteen * (at(1) + at(-1)) - (at(2) + at(-2)) - thirty * at(0))
                * inv_12h2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::CurvatureTuple;

    #[test]
    fn geodesic_sphere_is_umbilic() {
        for n in 3..=8usize {
            let p = RadialProfile::constant(n, 128, 1.0).unwrap();
            let f = curvature_from_profile(&p).unwrap();
            let coth = 1.0f64.cosh() / 1.0f64.sinh();
            for j in 0..f.node_count() {
                assert!((f.kappa_a[j] - coth).abs() < 1e-10, "n={n}");
                assert!((f.kappa_b[j] - coth).abs() < 1e-10, "n={n}");
                assert_eq!(f.v[j], 1.0);
            }
        }
    }

    #[test]
    fn warp_factor_identity_holds() {
        let p = RadialProfile::axisymmetric(
            5,
            128,
            (0..128)
                .map(|j| 1.0 + 0.1 * (2.0 * (j as f64 + 0.5) * std::f64::consts::PI / 128.0).cos())
                .collect(),
        )
        .unwrap();
        let f = curvature_from_profile(&p).unwrap();
        for j in 0..f.node_count() {
            let resid = (f.lambda_prime[j] * f.lambda_prime[j] - f.lambda[j] * f.lambda[j] - 1.0)
                .abs();
            assert!(resid < 1e-12, "node {j}: {resid:e}");
            assert!(f.v[j] >= 1.0);
        }
    }

    #[test]
    fn cosine_bump_is_two_convex_at_n4() {
        let n_rho = 400;
        let vals: Vec<f64> = (0..n_rho)
            .map(|j| 1.0 + 0.1 * (2.0 * (j as f64 + 0.5) * std::f64::consts::PI / 400.0).cos())
            .collect();
        let p = RadialProfile::axisymmetric(4, n_rho, vals).unwrap();
        let f = curvature_from_profile(&p).unwrap();
        assert!(f.two_convexity_violations().is_empty());
    }

    #[test]
    fn sigma_closed_form_matches_general_recurrence() {
        for n in 3..=8usize {
            let (a, b) = (1.7f64, 0.6f64);
            let mut kappa = vec![b; n - 1];
            kappa[0] = a;
            let tuple = CurvatureTuple::new(kappa).unwrap();
            for m in 0..=n - 1 {
                let want = tuple.elementary_symmetric(m).unwrap();
                let got = sigma_two_value(a, b, n, m);
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "n={n} m={m}: {got} vs {want}"
                );
            }
            // orders above n-1 vanish
            assert_eq!(sigma_two_value(a, b, n, n), 0.0);
        }
    }

    #[test]
    fn overflow_is_reported_with_node() {
        let mut vals = vec![1.0; 64];
        vals[17] = 24.9999;
        let p = RadialProfile::axisymmetric(4, 64, vals).unwrap();
        assert!(curvature_from_profile(&p).is_ok());
        // values at or above the cap never construct, so push one through set_values
        let mut vals = vec![1.0; 64];
        vals[17] = 25.5;
        assert!(matches!(
            RadialProfile::axisymmetric(4, 64, vals).unwrap_err(),
            GeomError::RadiusOverflow { node: 17, .. }
        ));
    }

    #[test]
    fn full_sphere_constant_matches_axisymmetric() {
        let p2 = RadialProfile::full_sphere(64, 128, vec![0.8; 64 * 128]).unwrap();
        let f2 = curvature_from_profile(&p2).unwrap();
        let coth = 0.8f64.cosh() / 0.8f64.sinh();
        for j in 0..f2.node_count() {
            assert!((f2.kappa_a[j] - coth).abs() < 1e-12);
            assert!((f2.kappa_b[j] - coth).abs() < 1e-12);
        }
    }

    #[test]
    fn full_sphere_reproduces_axisymmetric_profiles() {
        let (n_rho, n_psi) = (96, 192);
        let g1 = Grid::<f64>::axisymmetric(3, n_rho).unwrap();
        let vals1: Vec<f64> = (0..n_rho).map(|j| 1.0 + 0.1 * (2.0 * g1.rho(j)).cos()).collect();
        let p1 = RadialProfile::axisymmetric(3, n_rho, vals1.clone()).unwrap();
        let f1 = curvature_from_profile(&p1).unwrap();

        let mut vals2 = Vec::with_capacity(n_rho * n_psi);
        for j in 0..n_rho {
            vals2.extend(std::iter::repeat_n(vals1[j], n_psi));
        }
        let p2 = RadialProfile::full_sphere(n_rho, n_psi, vals2).unwrap();
        let f2 = curvature_from_profile(&p2).unwrap();

        for j in 0..n_rho {
            let (lo1, hi1) = (f1.kappa_a[j].min(f1.kappa_b[j]), f1.kappa_a[j].max(f1.kappa_b[j]));
            for i in 0..n_psi {
                let idx = j * n_psi + i;
                let (lo2, hi2) =
                    (f2.kappa_a[idx].min(f2.kappa_b[idx]), f2.kappa_a[idx].max(f2.kappa_b[idx]));
                assert!((lo1 - lo2).abs() < 1e-9 && (hi1 - hi2).abs() < 1e-9, "j={j} i={i}");
            }
        }
    }
}
