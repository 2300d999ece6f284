//! Seeded initial-shape library.
//!
//! Three families: geodesic spheres, single cosine bumps
//! `r(rho) = r0 + eps cos(k rho)`, and band-limited random graphs. Random
//! coefficients come from a ChaCha8 stream so identical seeds reproduce
//! identical shapes on every platform; the generator name is recorded in run
//! metadata.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hypgeom::{GeomError, Grid, RadialProfile};
use crate::scalar::Scalar;

/// Name of the PRNG behind `random_bandlimited`, recorded in run metadata.
pub const PRNG_NAME: &str = "chacha8";

/// Initial-shape descriptor. All radii are hyperbolic distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    /// Geodesic sphere of radius `r0`.
    Sphere { r0: f64 },
    /// `r(rho) = r0 + eps cos(k rho)`.
    CosineBump { r0: f64, eps: f64, k: u32 },
    /// `r0 + eps` times a random combination of modes `cos(k rho)`,
    /// `k = 1..=max_mode`, with coefficients normalized to unit l1 mass.
    RandomBandlimited {
        r0: f64,
        eps: f64,
        max_mode: u32,
        seed: u64,
    },
}

impl ShapeSpec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            ShapeSpec::RandomBandlimited { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// Samples the shape on an axisymmetric staggered grid.
///
/// Shapes that are even about the equator (spheres, even-`k` bumps) are
/// mirrored exactly so equatorial symmetry holds bitwise.
pub fn build_profile<S: Scalar>(
    spec: &ShapeSpec,
    n: usize,
    n_rho: usize,
) -> Result<RadialProfile<S>, GeomError> {
    let grid = Grid::<S>::axisymmetric(n, n_rho)?;
    let mut values = sample_axisymmetric(spec, &grid);
    if equatorially_symmetric(spec) {
        for j in 0..n_rho / 2 {
            values[n_rho - 1 - j] = values[j];
        }
    }
    RadialProfile::with_grid(grid, values)
}

/// Samples the shape on the full `S^2` grid (n = 3 only). Random shapes are
/// genuinely two-dimensional here: a random polynomial in the ambient
/// coordinates restricted to the sphere, which is automatically smooth across
/// the poles.
pub fn build_full_sphere_profile<S: Scalar>(
    spec: &ShapeSpec,
    n_rho: usize,
    n_psi: usize,
) -> Result<RadialProfile<S>, GeomError> {
    let grid = Grid::<S>::full_sphere(n_rho, n_psi)?;
    let values = match spec {
        ShapeSpec::Sphere { r0 } => vec![S::cst(*r0); grid.node_count()],
        ShapeSpec::CosineBump { r0, eps, k } => {
            let mut values = Vec::with_capacity(grid.node_count());
            for j in 0..n_rho {
                let x = S::cst(*k as f64) * grid.rho(j);
                let v = S::cst(*r0) + S::cst(*eps) * x.cos();
                values.extend(std::iter::repeat_n(v, n_psi));
            }
            values
        }
        ShapeSpec::RandomBandlimited {
            r0,
            eps,
            max_mode,
            seed,
        } => {
            let coeffs = polynomial_coefficients(*max_mode as usize, *seed);
            let mut values = Vec::with_capacity(grid.node_count());
            for j in 0..n_rho {
                let (s, c) = (
                    grid.sin_rho()[j].to_f64().unwrap(),
                    grid.cos_rho()[j].to_f64().unwrap(),
                );
                for i in 0..n_psi {
                    let psi = (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / n_psi as f64;
                    let (x, y, z) = (s * psi.cos(), s * psi.sin(), c);
                    let mut p = 0.0;
                    for &(a, b, cdeg, w) in &coeffs {
                        p += w * x.powi(a) * y.powi(b) * z.powi(cdeg);
                    }
                    values.push(S::cst(r0 + eps * p));
                }
            }
            values
        }
    };
    RadialProfile::with_grid(grid, values)
}

fn sample_axisymmetric<S: Scalar>(spec: &ShapeSpec, grid: &Grid<S>) -> Vec<S> {
    let n_rho = grid.n_rho();
    match spec {
        ShapeSpec::Sphere { r0 } => vec![S::cst(*r0); n_rho],
        ShapeSpec::CosineBump { r0, eps, k } => (0..n_rho)
            .map(|j| S::cst(*r0) + S::cst(*eps) * (S::cst(*k as f64) * grid.rho(j)).cos())
            .collect(),
        ShapeSpec::RandomBandlimited {
            r0,
            eps,
            max_mode,
            seed,
        } => {
            let coeffs = mode_coefficients(*max_mode as usize, *seed);
            (0..n_rho)
                .map(|j| {
                    let rho = grid.rho(j).to_f64().unwrap();
                    let sum: f64 = coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c * ((k + 1) as f64 * rho).cos())
                        .sum();
                    S::cst(r0 + eps * sum)
                })
                .collect()
        }
    }
}

fn equatorially_symmetric(spec: &ShapeSpec) -> bool {
    match spec {
        ShapeSpec::Sphere { .. } => true,
        ShapeSpec::CosineBump { k, .. } => k % 2 == 0,
        ShapeSpec::RandomBandlimited { .. } => false,
    }
}

/// l1-normalized random mode coefficients for `cos(k rho)`, `k = 1..=max_mode`.
fn mode_coefficients(max_mode: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new(-1.0f64, 1.0);
    let mut c: Vec<f64> = (0..max_mode.max(1)).map(|_| dist.sample(&mut rng)).collect();
    let norm: f64 = c.iter().map(|x| x.abs()).sum();
    if norm > 0.0 {
        for x in &mut c {
            *x /= norm;
        }
    }
    c
}

/// l1-normalized coefficients of the monomials `x^a y^b z^c` with
/// `1 <= a+b+c <= max_deg`.
fn polynomial_coefficients(max_deg: usize, seed: u64) -> Vec<(i32, i32, i32, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new(-1.0f64, 1.0);
    let mut coeffs = Vec::new();
    for d in 1..=max_deg.max(1) {
        for a in 0..=d {
            for b in 0..=d - a {
                let c = d - a - b;
                coeffs.push((a as i32, b as i32, c as i32, dist.sample(&mut rng)));
            }
        }
    }
    let norm: f64 = coeffs.iter().map(|(_, _, _, w)| w.abs()).sum();
    if norm > 0.0 {
        for (_, _, _, w) in &mut coeffs {
            *w /= norm;
        }
    }
    coeffs
}
