//! Independent oracle for the principal-curvature closed forms: assemble the
//! induced metric and second fundamental form as matrices in a round
//! orthonormal frame and diagonalize the pencil with a generalized symmetric
//! eigensolve. The closed forms must agree to near machine precision.

use nalgebra::{DMatrix, SymmetricEigen};

use hicf_core::hypgeom::{curvature_from_profile, Grid, RadialProfile};
use hicf_core::shapes::{build_profile, ShapeSpec};

/// Eigenvalues of `g^{-1} h` for an axisymmetric node, from the frame data
/// `p = (phi', 0, .., 0)`, `Hess = diag(phi'', cot phi', .., cot phi')`.
fn oracle_kappas(n: usize, lam: f64, lamp: f64, phi_p: f64, phi_pp: f64, cot: f64) -> Vec<f64> {
    let dim = n - 1;
    let v = (1.0 + phi_p * phi_p).sqrt();

    let mut p = DMatrix::<f64>::zeros(dim, 1);
    p[(0, 0)] = phi_p;
    let g = (DMatrix::<f64>::identity(dim, dim) + &p * p.transpose()) * lam * lam;

    let mut hess = DMatrix::<f64>::from_diagonal_element(dim, dim, cot * phi_p);
    hess[(0, 0)] = phi_pp;
    let h = &g * (lamp / (v * lam)) - hess * (lam / v);

    // generalized symmetric eigensolve via Cholesky: B = L^-1 h L^-T
    let chol = g.cholesky().expect("induced metric is positive definite");
    let l = chol.l();
    let m1 = l.solve_lower_triangular(&h).unwrap();
    let b = l.solve_lower_triangular(&m1.transpose()).unwrap();
    let mut eig: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

#[test]
fn closed_forms_match_matrix_eigenvalues_on_random_profiles() {
    let n_rho = 200;
    for n in 3..=8usize {
        let spec = ShapeSpec::RandomBandlimited {
            r0: 1.0,
            eps: 0.12,
            max_mode: 4,
            seed: 40 + n as u64,
        };
        let profile = build_profile::<f64>(&spec, n, n_rho).unwrap();
        let grid = profile.grid();
        let field = curvature_from_profile(&profile).unwrap();

        // recompute phi derivatives exactly as the geometry layer defines them
        let rp = grid.axisym_d1(profile.values());
        let rpp = grid.axisym_d2(profile.values());

        let mut worst: f64 = 0.0;
        for j in 0..n_rho {
            let r = profile.values()[j];
            let (lam, lamp) = (r.sinh(), r.cosh());
            let phi_p = rp[j] / lam;
            let phi_pp = rpp[j] / lam - lamp * rp[j] * rp[j] / (lam * lam);
            let oracle = oracle_kappas(n, lam, lamp, phi_p, phi_pp, grid.cot_rho()[j]);

            let mut closed = vec![field.kappa_b[j]; n - 2];
            closed.push(field.kappa_a[j]);
            closed.sort_by(|a, b| a.partial_cmp(b).unwrap());

            for (a, b) in oracle.iter().zip(&closed) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-10, "n={n}: worst eigenvalue mismatch {worst:e}");
    }
}

#[test]
fn geodesic_spheres_diagonalize_to_coth() {
    for n in 3..=8usize {
        let c = 1.4f64;
        let oracle = oracle_kappas(n, c.sinh(), c.cosh(), 0.0, 0.0, 0.3);
        for k in oracle {
            assert!((k - c.cosh() / c.sinh()).abs() < 1e-13, "n={n}");
        }
    }
}

#[test]
fn non_equatorial_axisymmetric_profile_matches_on_full_sphere_grid() {
    // a mixed odd/even profile exercises both ghost exchanges on the 2-D grid
    let (n_rho, n_psi) = (96, 192);
    let grid = Grid::<f64>::axisymmetric(3, n_rho).unwrap();
    let vals: Vec<f64> = (0..n_rho)
        .map(|j| {
            let rho = grid.rho(j);
            1.0 + 0.08 * rho.cos() + 0.05 * (3.0 * rho).cos()
        })
        .collect();
    let p1 = RadialProfile::axisymmetric(3, n_rho, vals.clone()).unwrap();
    let f1 = curvature_from_profile(&p1).unwrap();

    let mut vals2 = Vec::with_capacity(n_rho * n_psi);
    for v in &vals {
        vals2.extend(std::iter::repeat_n(*v, n_psi));
    }
    let p2 = RadialProfile::full_sphere(n_rho, n_psi, vals2).unwrap();
    let f2 = curvature_from_profile(&p2).unwrap();

    let mut worst: f64 = 0.0;
    for j in 0..n_rho {
        let (lo1, hi1) = (f1.kappa_a[j].min(f1.kappa_b[j]), f1.kappa_a[j].max(f1.kappa_b[j]));
        for i in 0..n_psi {
            let idx = j * n_psi + i;
            let (lo2, hi2) =
                (f2.kappa_a[idx].min(f2.kappa_b[idx]), f2.kappa_a[idx].max(f2.kappa_b[idx]));
            worst = worst.max((lo1 - lo2).abs()).max((hi1 - hi2).abs());
        }
    }
    assert!(worst < 1e-8, "worst eigenvalue mismatch {worst:e}");
}
