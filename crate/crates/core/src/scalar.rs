//! Floating-point scalar abstraction.
//!
//! All geometric kernels are generic over [`Scalar`] so the same code runs at
//! `f32` or `f64`. The verification suites and the CLI pin [`crate::Real`]
//! (`f64`); the tolerances quoted throughout the crate assume that choice.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Real scalar usable by the geometry and flow kernels: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Product
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Serialize
    + DeserializeOwned
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics on values not representable at all
    /// (never the case for the finite constants used in this crate).
    #[inline]
    fn cst(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count.
    #[inline]
    fn of_usize(k: usize) -> Self {
        Self::from_usize(k).expect("count fits in scalar")
    }

    /// `(sinh x, cosh x)` from a single exponential.
    ///
    /// Keeps the hyperbolic identity `cosh^2 - sinh^2 = 1` tight and halves
    /// the transcendental cost in the flow inner loop.
    #[inline]
    fn sinh_cosh(self) -> (Self, Self) {
        let e = self.exp();
        let q = e.recip();
        let half = Self::cst(0.5);
        (half * (e - q), half * (e + q))
    }

    /// `exp` restricted to the radius range `[0, 26]`.
    ///
    /// The default forwards to libm; `f64` overrides it with a branch-free
    /// kernel that auto-vectorizes, which matters in the flow inner loop
    /// where the exponential dominates the step cost. Accuracy is a few ulp.
    #[inline]
    fn exp_radius_range(self) -> Self {
        self.exp()
    }
}

impl Scalar for f32 {}

impl Scalar for f64 {
    #[inline]
    fn exp_radius_range(self) -> Self {
        exp_bounded_f64(self)
    }
}

/// Branch-free `exp` for arguments in `[0, 26]`: round-to-nearest range
/// reduction `x = k ln2 + f` with a split-constant `ln 2` (exact for the
/// `k <= 38` that occur here), degree-13 Taylor on `|f| <= ln2/2`, and an
/// exact power-of-two scale assembled from bits.
#[inline]
fn exp_bounded_f64(x: f64) -> f64 {
    const INV_LN2: f64 = std::f64::consts::LOG2_E;
    // high part carries 20 trailing zero bits, so k * LN2_HI is exact
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    // adding 1.5 * 2^52 rounds to nearest integer without needing SSE4.1
    const SHIFTER: f64 = 6_755_399_441_055_744.0;
    const C: [f64; 14] = [
        1.0 / 6_227_020_800.0, // 1/13!
        1.0 / 479_001_600.0,
        1.0 / 39_916_800.0,
        1.0 / 3_628_800.0,
        1.0 / 362_880.0,
        1.0 / 40_320.0,
        1.0 / 5_040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ];

    let kf = x * INV_LN2 + SHIFTER;
    let k = kf.to_bits() & 0xfff; // k in [0, 38], sign-free on this range
    let kf = kf - SHIFTER;
    let f = (x - kf * LN2_HI) - kf * LN2_LO;
    let mut p = C[0];
    for &c in &C[1..] {
        p = p * f + c;
    }
    let two_k = f64::from_bits((1023 + k) << 52);
    p * two_k
}

#[cfg(test)]
mod exp_kernel_tests {
    use super::*;

    #[test]
    fn matches_libm_over_the_radius_range() {
        let mut worst = 0.0f64;
        let mut x = 1e-4;
        while x < 26.0 {
            let rel = (exp_bounded_f64(x) / x.exp() - 1.0).abs();
            worst = worst.max(rel);
            x += 0.000_37;
        }
        assert!(worst < 2e-15, "worst relative deviation {worst:e}");
    }

    #[test]
    fn exact_at_zero_and_ln2_multiples() {
        assert_eq!(exp_bounded_f64(0.0), 1.0);
        for k in 1..=36u32 {
            let x = k as f64 * std::f64::consts::LN_2;
            let rel = (exp_bounded_f64(x) / x.exp() - 1.0).abs();
            assert!(rel < 2e-15, "k={k}: {rel:e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinh_cosh_matches_libm() {
        // absolute error of the single-exponential form is O(eps cosh r)
        for &r in &[0.02_f64, 0.5, 1.0, 3.0, 10.0] {
            let (s, c) = r.sinh_cosh();
            assert!((s - r.sinh()).abs() <= 5e-16 * r.cosh());
            assert!((c - r.cosh()).abs() <= 5e-16 * r.cosh());
        }
    }

    #[test]
    fn hyperbolic_identity_is_tight() {
        for &r in &[0.1_f64, 1.0, 2.5, 8.0] {
            let (s, c) = r.sinh_cosh();
            let resid = (c * c - s * s - 1.0).abs();
            assert!(resid <= 1e-12 * (1.0 + s * s), "r={r}: resid={resid:e}");
        }
    }

    #[test]
    fn works_at_f32() {
        let (s, c) = 1.0_f32.sinh_cosh();
        assert!((s - 1.0f32.sinh()).abs() < 1e-6);
        assert!((c - 1.0f32.cosh()).abs() < 1e-6);
    }
}
