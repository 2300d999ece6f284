//! Staggered grids on the round sphere, trigonometric tables, finite-difference
//! stencils and quadrature.
//!
//! Nodes sit at cell midpoints `rho_j = (j+1/2) pi/N`, so neither pole is a
//! node and `cot(rho)` stays finite everywhere. Pole regularity enters only
//! through even-reflection ghost values. Trig tables are built mirror-exactly
//! (`sin` copied, `cos` negated across the equator), which makes equatorially
//! symmetric data evolve with bitwise symmetry.

use serde::{Deserialize, Serialize};

use super::functionals::sphere_area_constant;
use super::GeomError;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// One radius value per polar node; all rotations about the axis act trivially.
    Axisymmetric,
    /// Latitude-longitude grid over the whole of `S^2` (ambient dimension 3 only).
    FullSphere,
}

/// Discretization of `S^{n-1}` together with precomputed tables.
#[derive(Clone, Debug)]
pub struct Grid<S> {
    n: usize,
    rep: Representation,
    n_rho: usize,
    n_psi: usize,
    d_rho: S,
    d_psi: S,
    sin_rho: Vec<S>,
    cos_rho: Vec<S>,
    cot_rho: Vec<S>,
    /// Per-polar-node round-measure weight: axisymmetric
    /// `omega_{n-2} sin^{n-2}(rho_j) d_rho`, full-sphere `sin(rho_j) d_rho d_psi`.
    w_round: Vec<S>,
    /// Euler-Maclaurin endpoint coefficient for the polar midpoint rule.
    /// Zero unless n = 3: for n >= 4 the integrand `f sin^{n-2}` has vanishing
    /// derivative at both poles and plain midpoint is already high order.
    pole_corr: S,
}

impl<S: Scalar> Grid<S> {
    pub fn axisymmetric(n: usize, n_rho: usize) -> Result<Self, GeomError> {
        if !super::DIMENSION_RANGE.contains(&n) {
            return Err(GeomError::InvalidDimension { n });
        }
        if n_rho < 8 {
            return Err(GeomError::GridTooCoarse { n_rho });
        }
        let d_rho = S::PI() / S::of_usize(n_rho);
        let (sin_rho, cos_rho, cot_rho) = trig_tables(n_rho, d_rho);
        let omega = sphere_area_constant::<S>(n - 1);
        let w_round = sin_rho
            .iter()
            .map(|s| omega * s.powi(n as i32 - 2) * d_rho)
            .collect();
        let pole_corr = if n == 3 {
            omega * d_rho * d_rho / S::cst(24.0)
        } else {
            S::zero()
        };
        Ok(Self {
            n,
            rep: Representation::Axisymmetric,
            n_rho,
            n_psi: 0,
            d_rho,
            d_psi: S::zero(),
            sin_rho,
            cos_rho,
            cot_rho,
            w_round,
            pole_corr,
        })
    }

    /// Full `S^2` grid; the polar ghost exchange needs an even longitude count.
    pub fn full_sphere(n_rho: usize, n_psi: usize) -> Result<Self, GeomError> {
        if n_rho < 8 {
            return Err(GeomError::GridTooCoarse { n_rho });
        }
        if n_psi < 8 || !n_psi.is_multiple_of(2) {
            return Err(GeomError::BadLongitudeCount { n_psi });
        }
        let d_rho = S::PI() / S::of_usize(n_rho);
        let d_psi = S::cst(2.0) * S::PI() / S::of_usize(n_psi);
        let (sin_rho, cos_rho, cot_rho) = trig_tables(n_rho, d_rho);
        let w_round = sin_rho.iter().map(|s| *s * d_rho * d_psi).collect();
        let pole_corr = d_rho * d_rho / S::cst(24.0);
        Ok(Self {
            n: 3,
            rep: Representation::FullSphere,
            n_rho,
            n_psi,
            d_rho,
            d_psi,
            sin_rho,
            cos_rho,
            cot_rho,
            w_round,
            pole_corr,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn representation(&self) -> Representation {
        self.rep
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn n_psi(&self) -> usize {
        self.n_psi
    }

    pub fn node_count(&self) -> usize {
        match self.rep {
            Representation::Axisymmetric => self.n_rho,
            Representation::FullSphere => self.n_rho * self.n_psi,
        }
    }

    pub fn d_rho(&self) -> S {
        self.d_rho
    }

    pub fn d_psi(&self) -> S {
        self.d_psi
    }

    /// Polar angle of polar index `j`.
    pub fn rho(&self, j: usize) -> S {
        (S::of_usize(j) + S::cst(0.5)) * self.d_rho
    }

    pub fn sin_rho(&self) -> &[S] {
        &self.sin_rho
    }

    pub fn cos_rho(&self) -> &[S] {
        &self.cos_rho
    }

    pub fn cot_rho(&self) -> &[S] {
        &self.cot_rho
    }

    /// Polar index of a flat node index.
    pub fn polar_index(&self, node: usize) -> usize {
        match self.rep {
            Representation::Axisymmetric => node,
            Representation::FullSphere => node / self.n_psi,
        }
    }

    /// Integrates a per-node quantity against the round measure of `S^{n-1}`.
    ///
    /// Midpoint rule in every direction, plus the Euler-Maclaurin endpoint
    /// correction in `rho` for n = 3 (see module docs); integrands smooth on
    /// the sphere then converge at fourth order or better.
    pub fn integrate_round_with(&self, f: impl Fn(usize) -> S) -> S {
        match self.rep {
            Representation::Axisymmetric => {
                let mut total = S::zero();
                for j in 0..self.n_rho {
                    total += f(j) * self.w_round[j];
                }
                if self.pole_corr != S::zero() {
                    let north = pole_extrapolate(f(0), f(1), f(2));
                    let last = self.n_rho - 1;
                    let south = pole_extrapolate(f(last), f(last - 1), f(last - 2));
                    total += self.pole_corr * (-north - south);
                }
                total
            }
            Representation::FullSphere => {
                let mut total = S::zero();
                let mut row_sum = vec![S::zero(); self.n_rho];
                for (j, rs) in row_sum.iter_mut().enumerate() {
                    let mut s = S::zero();
                    for i in 0..self.n_psi {
                        s += f(j * self.n_psi + i);
                    }
                    *rs = s;
                    total += s * self.w_round[j];
                }
                // row_sum * d_psi approximates the psi-integral; its pole value
                // is psi-independent so the same endpoint correction applies.
                let last = self.n_rho - 1;
                let north = pole_extrapolate(row_sum[0], row_sum[1], row_sum[2]) * self.d_psi;
                let south =
                    pole_extrapolate(row_sum[last], row_sum[last - 1], row_sum[last - 2]) * self.d_psi;
                total + self.pole_corr * (-north - south)
            }
        }
    }

    pub fn integrate_round(&self, values: &[S]) -> S {
        debug_assert_eq!(values.len(), self.node_count());
        self.integrate_round_with(|j| values[j])
    }

    /// Total round measure of the grid (the discrete area of `S^{n-1}`).
    pub fn round_measure_total(&self) -> S {
        self.integrate_round_with(|_| S::one())
    }

    /// Fourth-order first derivative in `rho` of an axisymmetric nodal field.
    pub fn axisym_d1(&self, values: &[S]) -> Vec<S> {
        assert_eq!(self.rep, Representation::Axisymmetric);
        assert_eq!(values.len(), self.n_rho);
        let mut ext = Vec::new();
        extend_reflect_into(values, &mut ext);
        let mut out = vec![S::zero(); self.n_rho];
        d1_into(&ext, self.inv_12h(), &mut out);
        out
    }

    /// Fourth-order second derivative in `rho` of an axisymmetric nodal field.
    pub fn axisym_d2(&self, values: &[S]) -> Vec<S> {
        assert_eq!(self.rep, Representation::Axisymmetric);
        assert_eq!(values.len(), self.n_rho);
        let mut ext = Vec::new();
        extend_reflect_into(values, &mut ext);
        let mut out = vec![S::zero(); self.n_rho];
        d2_into(&ext, self.inv_12h2(), &mut out);
        out
    }

    pub(crate) fn inv_12h(&self) -> S {
        (S::cst(12.0) * self.d_rho).recip()
    }

    pub(crate) fn inv_12h2(&self) -> S {
        (S::cst(12.0) * self.d_rho * self.d_rho).recip()
    }

    pub(crate) fn inv_12h_psi(&self) -> S {
        (S::cst(12.0) * self.d_psi).recip()
    }

    pub(crate) fn inv_12h2_psi(&self) -> S {
        (S::cst(12.0) * self.d_psi * self.d_psi).recip()
    }
}

/// Mirror-exact trig tables on the staggered polar grid.
fn trig_tables<S: Scalar>(n_rho: usize, d_rho: S) -> (Vec<S>, Vec<S>, Vec<S>) {
    let mut sin_rho = vec![S::zero(); n_rho];
    let mut cos_rho = vec![S::zero(); n_rho];
    for j in 0..n_rho {
        if 2 * j + 1 == n_rho {
            // exact equator node
            sin_rho[j] = S::one();
            cos_rho[j] = S::zero();
        } else if 2 * j < n_rho {
            let rho = (S::of_usize(j) + S::cst(0.5)) * d_rho;
            sin_rho[j] = rho.sin();
            cos_rho[j] = rho.cos();
        } else {
            sin_rho[j] = sin_rho[n_rho - 1 - j];
            cos_rho[j] = -cos_rho[n_rho - 1 - j];
        }
    }
    let cot_rho = sin_rho
        .iter()
        .zip(&cos_rho)
        .map(|(s, c)| *c / *s)
        .collect();
    (sin_rho, cos_rho, cot_rho)
}

/// Even extrapolation of a staggered nodal field to the adjacent pole,
/// fourth order in the grid spacing.
pub(crate) fn pole_extrapolate<S: Scalar>(f0: S, f1: S, f2: S) -> S {
    (S::cst(150.0) * f0 - S::cst(25.0) * f1 + S::cst(3.0) * f2) / S::cst(128.0)
}

/// Appends even-reflection ghosts: out = [r1, r0, r..., r_{N-1}, r_{N-2}].
pub(crate) fn extend_reflect_into<S: Copy>(r: &[S], ext: &mut Vec<S>) {
    let n = r.len();
    ext.clear();
    ext.reserve(n + 4);
    ext.push(r[1]);
    ext.push(r[0]);
    ext.extend_from_slice(r);
    ext.push(r[n - 1]);
    ext.push(r[n - 2]);
}

/// Fourth-order centered first derivative on the extended buffer.
///
/// Written as `8(f_{+1} - f_{-1}) - (f_{+2} - f_{-2})` so mirrored data
/// produces an exactly negated derivative.
pub(crate) fn d1_into<S: Scalar>(ext: &[S], inv_12h: S, out: &mut [S]) {
    let eight = S::cst(8.0);
    for (o, w) in out.iter_mut().zip(ext.windows(5)) {
        *o = (eight * (w[3] - w[1]) - (w[4] - w[0])) * inv_12h;
    }
}

/// Fourth-order centered second derivative on the extended buffer.
pub(crate) fn d2_into<S: Scalar>(ext: &[S], inv_12h2: S, out: &mut [S]) {
    let sixteen = S::cst(16.0);
    let thirty = S::cst(30.0);
    for (o, w) in out.iter_mut().zip(ext.windows(5)) {
        *o = (sixteen * (w[3] + w[1]) - (w[4] + w[0]) - thirty * w[2]) * inv_12h2;
    }
}
