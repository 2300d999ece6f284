//! Elementary symmetric functions of principal curvatures.
//!
//! Houses the pointwise algebra the rest of the crate leans on: the
//! polynomials `sigma_m`, Newton-tensor diagonals, Garding-cone membership,
//! the trace identities
//!
//! ```text
//! sum_i T_i k_i   = m sigma_m
//! sum_i T_i       = (n - m) sigma_{m-1}
//! sum_i T_i k_i^2 = sigma_1 sigma_m - (m + 1) sigma_{m+1}
//! ```
//!
//! and the Newton-MacLaurin ratio bounds
//!
//! ```text
//! sigma_{m-1} sigma_{m+1} / sigma_m^2 <= m(n-m-1) / ((m+1)(n-m))
//! sigma_1 sigma_{m-1} / sigma_m       >= m(n-1) / (n-m)
//! ```
//!
//! which hold on the cone `Gamma_m` with equality exactly at umbilic tuples.
//! Here `n` is the ambient dimension, so a tuple carries `n - 1` entries.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SymfunError {
    #[error("curvature tuple needs at least 2 entries (ambient dimension >= 3), got {0}")]
    TooFewEntries(usize),
    #[error("curvature entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("symmetric-function order {m} outside valid range {min}..={max}")]
    OrderOutOfRange { m: usize, min: usize, max: usize },
    #[error("sigma_{m} vanishes; ratio undefined (tuple outside the Garding cone)")]
    DegenerateSigma { m: usize },
}

/// Ordered principal curvatures of a hypersurface point in `H^n`.
///
/// Holds `n - 1` finite reals; the ambient space is normalized to sectional
/// curvature -1, so the entries are dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTuple<S>(Vec<S>);

impl<S: Scalar> CurvatureTuple<S> {
    pub fn new(kappa: Vec<S>) -> Result<Self, SymfunError> {
        if kappa.len() < 2 {
            return Err(SymfunError::TooFewEntries(kappa.len()));
        }
        if let Some(index) = kappa.iter().position(|k| !k.is_finite()) {
            return Err(SymfunError::NonFinite { index });
        }
        Ok(Self(kappa))
    }

    /// Ambient dimension `n` (one more than the number of curvatures).
    pub fn ambient_dim(&self) -> usize {
        self.0.len() + 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    /// `sigma_m` of the tuple; `sigma_0 = 1` by convention.
    ///
    /// Built by the incremental coefficient recurrence rather than subset
    /// enumeration, so large fuzzing tuples stay cheap and stable.
    pub fn elementary_symmetric(&self, m: usize) -> Result<S, SymfunError> {
        if m > self.len() {
            return Err(SymfunError::OrderOutOfRange {
                m,
                min: 0,
                max: self.len(),
            });
        }
        Ok(elem_sym_prefix(&self.0, m)[m])
    }

    /// All of `sigma_0 ..= sigma_{n-1}` in one pass.
    pub fn all_elementary_symmetric(&self) -> Vec<S> {
        elem_sym_prefix(&self.0, self.len())
    }

    /// Diagonal of the Newton tensor `T_{m-1}` in the principal basis:
    /// `T_i = sigma_{m-1}(kappa with entry i deleted)`.
    pub fn newton_tensor_diag(&self, m: usize) -> Result<Vec<S>, SymfunError> {
        self.check_order(m, 1, self.len())?;
        let mut deleted = Vec::with_capacity(self.len() - 1);
        let diag = (0..self.len())
            .map(|i| {
                deleted.clear();
                deleted.extend(self.0.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, k)| *k));
                elem_sym_prefix(&deleted, m - 1)[m - 1]
            })
            .collect();
        Ok(diag)
    }

    /// Residuals of the three trace identities at order `m`, compared to `tol`.
    ///
    /// The identities are exact polynomials of the inputs, so the residuals
    /// are evaluated in compensated double-word arithmetic; what is reported
    /// is the identity defect at the given (floating-point) tuple, not the
    /// checker's own rounding noise.
    pub fn verify_trace_identities(&self, m: usize, tol: S) -> Result<TraceIdentityCheck<S>, SymfunError> {
        self.check_order(m, 1, self.len() - 1)?;
        let n = self.ambient_dim();
        let sig = dd::elem_sym_prefix(&self.0, m + 1);

        let mut tk = dd::Dd::zero();
        let mut tr = dd::Dd::zero();
        let mut tk2 = dd::Dd::zero();
        let mut deleted = Vec::with_capacity(self.len() - 1);
        for (i, &k) in self.0.iter().enumerate() {
            deleted.clear();
            deleted.extend(self.0.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x));
            let t = dd::elem_sym_prefix(&deleted, m - 1)[m - 1];
            let kd = dd::Dd::from(k);
            tk = tk.add(t.mul(kd));
            tr = tr.add(t);
            tk2 = tk2.add(t.mul(kd).mul(kd));
        }
        let scale = |c: usize, x: dd::Dd<S>| x.mul(dd::Dd::from(S::of_usize(c)));
        let residuals = [
            tk.sub(scale(m, sig[m])).value(),
            tr.sub(scale(n - m, sig[m - 1])).value(),
            tk2.sub(sig[1].mul(sig[m]).sub(scale(m + 1, sig[m + 1]))).value(),
        ];
        let pass = residuals.iter().all(|r| r.abs() <= tol);
        Ok(TraceIdentityCheck { residuals, pass })
    }

    /// Strict Garding-cone test: `sigma_i > 0` for `i = 1..=m`.
    ///
    /// No epsilon is applied; callers wanting slack perturb the input.
    pub fn in_garding_cone(&self, m: usize) -> Result<bool, SymfunError> {
        self.check_order(m, 1, self.len())?;
        let sig = elem_sym_prefix(&self.0, m);
        Ok(sig[1..=m].iter().all(|s| *s > S::zero()))
    }

    /// Newton-MacLaurin ratios and sharp bounds at order `m`.
    ///
    /// Caller guarantees `kappa` lies in `Gamma_m`; a vanishing `sigma_m`
    /// is reported as [`SymfunError::DegenerateSigma`].
    pub fn newton_maclaurin_margins(&self, m: usize) -> Result<NewtonMaclaurinMargins<S>, SymfunError> {
        self.check_order(m, 1, self.len() - 1)?;
        let sig = self.all_elementary_symmetric();
        if sig[m] == S::zero() {
            return Err(SymfunError::DegenerateSigma { m });
        }
        let n = self.ambient_dim();
        let [nf, mf] = [S::of_usize(n), S::of_usize(m)];
        Ok(NewtonMaclaurinMargins {
            ratio_upper: sig[m - 1] * sig[m + 1] / (sig[m] * sig[m]),
            bound_upper: mf * S::of_usize(n - m - 1) / (S::of_usize(m + 1) * (nf - mf)),
            ratio_lower: sig[1] * sig[m - 1] / sig[m],
            bound_lower: mf * S::of_usize(n - 1) / (nf - mf),
        })
    }

    fn check_order(&self, m: usize, min: usize, max: usize) -> Result<(), SymfunError> {
        if m < min || m > max {
            return Err(SymfunError::OrderOutOfRange { m, min, max });
        }
        Ok(())
    }
}

/// Coefficient build of `prod_i (1 + k_i x)` truncated at degree `max_m`;
/// entry `m` of the result is `sigma_m`.
fn elem_sym_prefix<S: Scalar>(kappa: &[S], max_m: usize) -> Vec<S> {
    let mut e = vec![S::zero(); max_m + 1];
    e[0] = S::one();
    for (i, &k) in kappa.iter().enumerate() {
        let top = max_m.min(i + 1);
        for m in (1..=top).rev() {
            let add = k * e[m - 1];
            e[m] += add;
        }
    }
    e
}

/// Double-word (compensated) arithmetic for the identity checker. Sums and
/// products carry an error term via two-sum / FMA two-product, which keeps
/// the evaluated residuals at the square of working precision.
mod dd {
    use crate::scalar::Scalar;

    #[derive(Clone, Copy, Debug)]
    pub struct Dd<S> {
        hi: S,
        lo: S,
    }

    fn two_sum<S: Scalar>(a: S, b: S) -> (S, S) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum<S: Scalar>(a: S, b: S) -> (S, S) {
        let s = a + b;
        (s, b - (s - a))
    }

    fn two_prod<S: Scalar>(a: S, b: S) -> (S, S) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    impl<S: Scalar> From<S> for Dd<S> {
        fn from(hi: S) -> Self {
            Dd { hi, lo: S::zero() }
        }
    }

    impl<S: Scalar> Dd<S> {
        pub fn zero() -> Self {
            Dd { hi: S::zero(), lo: S::zero() }
        }

        pub fn one() -> Self {
            Dd { hi: S::one(), lo: S::zero() }
        }

        pub fn value(self) -> S {
            self.hi + self.lo
        }

        pub fn add(self, other: Self) -> Self {
            let (s, e) = two_sum(self.hi, other.hi);
            let (hi, lo) = quick_two_sum(s, e + self.lo + other.lo);
            Dd { hi, lo }
        }

        pub fn sub(self, other: Self) -> Self {
            self.add(Dd { hi: -other.hi, lo: -other.lo })
        }

        pub fn mul(self, other: Self) -> Self {
            let (p, e) = two_prod(self.hi, other.hi);
            let (hi, lo) = quick_two_sum(p, e + self.hi * other.lo + self.lo * other.hi);
            Dd { hi, lo }
        }
    }

    /// `sigma_0 ..= sigma_{max_m}` of the exact input tuple, in double-word
    /// precision.
    pub fn elem_sym_prefix<S: Scalar>(kappa: &[S], max_m: usize) -> Vec<Dd<S>> {
        let mut e = vec![Dd::zero(); max_m + 1];
        e[0] = Dd::one();
        for (i, &k) in kappa.iter().enumerate() {
            let kd = Dd::from(k);
            let top = max_m.min(i + 1);
            for m in (1..=top).rev() {
                e[m] = e[m].add(kd.mul(e[m - 1]));
            }
        }
        e
    }
}

/// Outcome of the trace-identity check: signed residuals of the three
/// identities in the order listed in the module docs.
#[derive(Debug, Clone, Copy)]
pub struct TraceIdentityCheck<S> {
    pub residuals: [S; 3],
    pub pass: bool,
}

impl<S: Scalar> TraceIdentityCheck<S> {
    pub fn max_abs_residual(&self) -> S {
        self.residuals.iter().fold(S::zero(), |a, r| a.max(r.abs()))
    }
}

/// Newton-MacLaurin ratios paired with their sharp constants.
///
/// The inequalities assert `ratio_upper <= bound_upper` and
/// `ratio_lower >= bound_lower`; both are equalities iff the tuple is umbilic.
#[derive(Debug, Clone, Copy)]
pub struct NewtonMaclaurinMargins<S> {
    pub ratio_upper: S,
    pub bound_upper: S,
    pub ratio_lower: S,
    pub bound_lower: S,
}

impl<S: Scalar> NewtonMaclaurinMargins<S> {
    /// Both inequalities hold with slack `tol`.
    pub fn hold(&self, tol: S) -> bool {
        self.ratio_upper <= self.bound_upper + tol && self.ratio_lower >= self.bound_lower - tol
    }

    /// Distance to the sharp constants, nonnegative when the bounds hold.
    pub fn slacks(&self) -> (S, S) {
        (self.bound_upper - self.ratio_upper, self.ratio_lower - self.bound_lower)
    }
}

/// Draws `count` tuples uniformly from `(-2, 5)^{n-1}` and keeps those inside
/// `Gamma_2` (rejection sampling), using a seeded ChaCha8 stream.
pub fn sample_gamma2_tuples<S: Scalar>(n: usize, count: usize, seed: u64) -> Vec<CurvatureTuple<S>> {
    assert!(n >= 3, "ambient dimension must be at least 3");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let box_dist = Uniform::new(-2.0f64, 5.0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let kappa: Vec<S> = (0..n - 1).map(|_| S::cst(box_dist.sample(&mut rng))).collect();
        let tuple = CurvatureTuple::new(kappa).expect("sampled tuple is valid");
        if tuple.in_garding_cone(2).expect("m=2 valid for n>=3") {
            out.push(tuple);
        }
    }
    out
}
