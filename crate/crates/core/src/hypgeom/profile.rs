//! Radial profiles: the discretized graph function `r` over `S^{n-1}`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::grid::{Grid, Representation};
use super::{GeomError, RADIUS_CAP};
use crate::scalar::Scalar;

/// Discretized star-shaped hypersurface: positive radii on a staggered grid.
///
/// Serialized as `{"n", "representation", "n_rho", ["n_psi"], "r"}` with the
/// radii row-major (`rho` outer, `psi` inner) on full-sphere grids. These
/// field names are stable.
#[derive(Clone, Debug)]
pub struct RadialProfile<S> {
    grid: Grid<S>,
    r: Vec<S>,
}

impl<S: Scalar> RadialProfile<S> {
    pub fn axisymmetric(n: usize, n_rho: usize, r: Vec<S>) -> Result<Self, GeomError> {
        let grid = Grid::axisymmetric(n, n_rho)?;
        Self::with_grid(grid, r)
    }

    /// Full-sphere profile; only the n = 3 oracle uses this representation.
    pub fn full_sphere(n_rho: usize, n_psi: usize, r: Vec<S>) -> Result<Self, GeomError> {
        let grid = Grid::full_sphere(n_rho, n_psi)?;
        Self::with_grid(grid, r)
    }

    pub fn constant(n: usize, n_rho: usize, c: S) -> Result<Self, GeomError> {
        Self::axisymmetric(n, n_rho, vec![c; n_rho])
    }

    pub fn with_grid(grid: Grid<S>, r: Vec<S>) -> Result<Self, GeomError> {
        if r.len() != grid.node_count() {
            return Err(GeomError::WrongValueCount {
                expected: grid.node_count(),
                got: r.len(),
            });
        }
        validate_radii(&r)?;
        Ok(Self { grid, r })
    }

    pub fn n(&self) -> usize {
        self.grid.ambient_dim()
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.r
    }

    /// Replaces the radii wholesale, revalidating.
    pub fn set_values(&mut self, r: Vec<S>) -> Result<(), GeomError> {
        if r.len() != self.grid.node_count() {
            return Err(GeomError::WrongValueCount {
                expected: self.grid.node_count(),
                got: r.len(),
            });
        }
        validate_radii(&r)?;
        self.r = r;
        Ok(())
    }

    pub fn min_radius(&self) -> S {
        self.r.iter().copied().fold(S::infinity(), S::min)
    }

    pub fn max_radius(&self) -> S {
        self.r.iter().copied().fold(S::neg_infinity(), S::max)
    }
}

impl<S: Scalar> PartialEq for RadialProfile<S> {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n()
            && self.grid.representation() == other.grid.representation()
            && self.grid.n_rho() == other.grid.n_rho()
            && self.grid.n_psi() == other.grid.n_psi()
            && self.r == other.r
    }
}

pub(crate) fn validate_radii<S: Scalar>(r: &[S]) -> Result<(), GeomError> {
    let cap = S::cst(RADIUS_CAP);
    for (node, &x) in r.iter().enumerate() {
        if !x.is_finite() {
            return Err(GeomError::NonFiniteRadius { node });
        }
        if x <= S::zero() {
            return Err(GeomError::NonPositiveRadius {
                node,
                value: x.to_f64().unwrap_or(f64::NAN),
            });
        }
        if x >= cap {
            return Err(GeomError::RadiusOverflow {
                node,
                value: x.to_f64().unwrap_or(f64::NAN),
                cap: RADIUS_CAP,
            });
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ProfileDoc<S> {
    n: usize,
    representation: Representation,
    n_rho: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_psi: Option<usize>,
    r: Vec<S>,
}

impl<S: Scalar> Serialize for RadialProfile<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let doc = ProfileDoc {
            n: self.n(),
            representation: self.grid.representation(),
            n_rho: self.grid.n_rho(),
            n_psi: match self.grid.representation() {
                Representation::Axisymmetric => None,
                Representation::FullSphere => Some(self.grid.n_psi()),
            },
            r: self.r.clone(),
        };
        doc.serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for RadialProfile<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = ProfileDoc::<S>::deserialize(deserializer)?;
        let profile = match doc.representation {
            Representation::Axisymmetric => RadialProfile::axisymmetric(doc.n, doc.n_rho, doc.r),
            Representation::FullSphere => {
                if doc.n != 3 {
                    return Err(D::Error::custom(GeomError::FullSphereDimension { n: doc.n }));
                }
                let n_psi = doc
                    .n_psi
                    .ok_or_else(|| D::Error::custom("full_sphere profile needs n_psi"))?;
                RadialProfile::full_sphere(doc.n_rho, n_psi, doc.r)
            }
        };
        profile.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_radii() {
        let err = RadialProfile::axisymmetric(4, 16, vec![1.0; 15]).unwrap_err();
        assert!(matches!(err, GeomError::WrongValueCount { expected: 16, got: 15 }));

        let mut r = vec![1.0; 16];
        r[3] = -0.5;
        assert!(matches!(
            RadialProfile::axisymmetric(4, 16, r).unwrap_err(),
            GeomError::NonPositiveRadius { node: 3, .. }
        ));

        let mut r = vec![1.0; 16];
        r[9] = 26.0;
        assert!(matches!(
            RadialProfile::axisymmetric(4, 16, r).unwrap_err(),
            GeomError::RadiusOverflow { node: 9, .. }
        ));

        let mut r = vec![1.0; 16];
        r[0] = f64::NAN;
        assert!(matches!(
            RadialProfile::axisymmetric(4, 16, r).unwrap_err(),
            GeomError::NonFiniteRadius { node: 0 }
        ));
    }

    #[test]
    fn json_round_trip_axisymmetric() {
        let p = RadialProfile::axisymmetric(5, 16, (0..16).map(|j| 1.0 + 0.01 * j as f64).collect())
            .unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"representation\":\"axisymmetric\""));
        assert!(json.contains("\"n\":5"));
        assert!(!json.contains("n_psi"));
        let q: RadialProfile<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn json_round_trip_full_sphere() {
        let p = RadialProfile::full_sphere(8, 16, vec![1.25; 128]).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"representation\":\"full_sphere\""));
        assert!(json.contains("\"n_psi\":16"));
        let q: RadialProfile<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn full_sphere_requires_n3_on_load() {
        let bad = r#"{"n":4,"representation":"full_sphere","n_rho":8,"n_psi":16,"r":[1.0]}"#;
        assert!(serde_json::from_str::<RadialProfile<f64>>(bad).is_err());
    }
}
