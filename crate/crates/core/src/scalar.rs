//! Numeric abstraction over the two supported weight arithmetics.
//!
//! Sweeps and reports run on `f64`; threshold and oracle-equivalence checks
//! run on `num::BigRational`, where every branch probability of the protocols
//! here is exactly representable (all gate factors are powers of two and all
//! input weights are finite ratios).

use num::{BigRational, FromPrimitive, ToPrimitive};
use num_traits::{Num, Signed};
use std::fmt::Debug;

/// Weight arithmetic: addition, multiplication, division, ordering, plus the
/// conversions needed to move between parsed `f64` inputs and reports.
pub trait Scalar: Clone + PartialOrd + Debug + Num + Signed {
    /// True when arithmetic is exact and comparisons need no tolerance.
    const EXACT: bool;

    /// The ratio `num/den`, exactly for exact arithmetic.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Exact injection of a binary float (rationals keep its exact value).
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    /// Comparison slack: zero for exact arithmetic, `1e-12` for `f64`.
    fn tol() -> Self;

    /// `|a - b| <= tol`.
    fn close(a: &Self, b: &Self) -> bool {
        (a.clone() - b.clone()).abs() <= Self::tol()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tol() -> Self {
        crate::F64_TOL
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite float")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).expect("ratio fits in f64")
    }

    fn tol() -> Self {
        BigRational::new(0.into(), 1.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_roundtrip() {
        assert_eq!(<f64 as Scalar>::from_ratio(3, 4), 0.75);
        let r = <BigRational as Scalar>::from_ratio(3, 4);
        assert_eq!(Scalar::to_f64(&r), 0.75);
    }

    #[test]
    fn from_f64_is_exact_for_rationals() {
        // 0.1 is not a finite binary fraction; the rational must capture the
        // exact f64 bit pattern, not the decimal.
        let r = <BigRational as Scalar>::from_f64(0.1);
        assert_eq!(Scalar::to_f64(&r), 0.1);
        assert_ne!(r, <BigRational as Scalar>::from_ratio(1, 10));
    }

    #[test]
    fn closeness_respects_mode() {
        assert!(<f64 as Scalar>::close(&1.0, &(1.0 + 1e-13)));
        let a = <BigRational as Scalar>::from_ratio(1, 3);
        let b = <BigRational as Scalar>::from_ratio(1, 3);
        assert!(<BigRational as Scalar>::close(&a, &b));
        let c = <BigRational as Scalar>::from_ratio(1, 3) + <BigRational as Scalar>::from_ratio(1, 1_000_000_000_000_000);
        assert!(!<BigRational as Scalar>::close(&a, &c));
    }
}
