//! Phase purification: the two-weight track that runs after a global
//! Hadamard transform maps phase errors onto bit parities.
//!
//! States here carry a single error weight: `p0` on the target and
//! `p1 = 1 - p0` on the lone phase-error pattern. One round compares the
//! parities of two copies; agreeing outcomes form the identity branch,
//! disagreeing ones the cross branch. Both update rules are independent of
//! the photon count, so every function below is a rational expression in the
//! two input weights.

use crate::pattern::check_photon_count;
use crate::scalar::Scalar;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Two-weight phase ensemble: `p0` on the target state, `1 - p0` on the
/// phase-error state.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEnsemble<T = f64> {
    n: u8,
    p0: T,
}

impl<T: Scalar> PhaseEnsemble<T> {
    pub fn new(n: u8, p0: T) -> Result<Self> {
        check_photon_count(n)?;
        if p0 < T::zero() || p0 > T::one() {
            return Err(Error::ProbabilityRange(p0.to_f64()));
        }
        Ok(PhaseEnsemble { n, p0 })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn p0(&self) -> &T {
        &self.p0
    }

    pub fn p1(&self) -> T {
        T::one() - self.p0.clone()
    }

    /// Converts the weight to another scalar type through `f64`.
    pub fn map_scalar<U: Scalar>(&self) -> PhaseEnsemble<U> {
        PhaseEnsemble { n: self.n, p0: U::from_f64(self.p0.to_f64()) }
    }
}

#[derive(Serialize, Deserialize)]
struct PhaseRepr {
    n: u8,
    p0: f64,
}

impl PhaseEnsemble<f64> {
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: PhaseRepr =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        PhaseEnsemble::new(repr.n, repr.p0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PhaseRepr { n: self.n, p0: self.p0 }).expect("plain struct")
    }
}

/// One surviving branch of a phase purification round.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOutcome<T = f64> {
    pub branch_probability: T,
    pub ensemble: PhaseEnsemble<T>,
}

fn check_same_n<T: Scalar>(r1: &PhaseEnsemble<T>, r2: &PhaseEnsemble<T>) -> Result<()> {
    if r1.n() != r2.n() {
        return Err(Error::PhotonMismatch(r1.n(), r2.n()));
    }
    Ok(())
}

/// Identity branch of one round: both copies carried the same error, so the
/// kept copy's target weight becomes `p0 p0 / (p0 p0 + p1 p1)`.
pub fn phase_identity<T: Scalar>(
    r1: &PhaseEnsemble<T>,
    r2: &PhaseEnsemble<T>,
) -> Result<PhaseOutcome<T>> {
    check_same_n(r1, r2)?;
    let hit = r1.p0().clone() * r2.p0().clone();
    let branch = hit.clone() + r1.p1() * r2.p1();
    if branch.is_zero() {
        return Err(Error::DegenerateBranch);
    }
    Ok(PhaseOutcome {
        branch_probability: branch.clone(),
        ensemble: PhaseEnsemble::new(r1.n(), hit / branch)?,
    })
}

/// Cross branch of one round: the copies disagreed, leaving residual weight
/// `p0 (1 - q0) / (p0 (1 - q0) + (1 - p0) q0)` on the target.
pub fn phase_residual<T: Scalar>(
    r1: &PhaseEnsemble<T>,
    r2: &PhaseEnsemble<T>,
) -> Result<PhaseOutcome<T>> {
    check_same_n(r1, r2)?;
    let hit = r1.p0().clone() * r2.p1();
    let branch = hit.clone() + r1.p1() * r2.p0().clone();
    if branch.is_zero() {
        return Err(Error::DegenerateBranch);
    }
    Ok(PhaseOutcome {
        branch_probability: branch.clone(),
        ensemble: PhaseEnsemble::new(r1.n(), hit / branch)?,
    })
}

/// Re-purifies a cross-branch output against itself, boosting its weight to
/// `p0^2 / (p0^2 + p1^2)`.
pub fn phase_second_round<T: Scalar>(r: &PhaseEnsemble<T>) -> Result<PhaseOutcome<T>> {
    phase_identity(r, r)
}

/// True when the second-round weight of the cross branch beats the larger
/// input weight `p1`: recycling the cross combinations is then worthwhile.
///
/// Evaluated in the cross-multiplied form
/// `p1^2 (1-p2)^2 (1-p1) > p1 p2^2 (1-p1)^2`,
/// which equals the direct comparison everywhere including the boundary
/// `p1 = 1`, where the second-round weight only ties.
pub fn phase_residual_improves<T: Scalar>(p1: &T, p2: &T) -> bool {
    let q1 = T::one() - p1.clone();
    let q2 = T::one() - p2.clone();
    let lhs = p1.clone() * p1.clone() * q2.clone() * q2 * q1.clone();
    let rhs = p1.clone() * p2.clone() * p2.clone() * q1.clone() * q1;
    lhs > rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    fn p(n: u8, p0: f64) -> PhaseEnsemble {
        PhaseEnsemble::new(n, p0).unwrap()
    }

    #[test]
    fn identity_branch_values() {
        let out = phase_identity(&p(3, 0.8), &p(3, 0.6)).unwrap();
        assert!((out.branch_probability - 0.56).abs() < 1e-15);
        assert!((out.ensemble.p0() - 0.48 / 0.56).abs() < 1e-15);
        let pure = phase_identity(&p(3, 1.0), &p(3, 1.0)).unwrap();
        assert_eq!(*pure.ensemble.p0(), 1.0);
        let equal = phase_identity(&p(3, 0.8), &p(3, 0.8)).unwrap();
        assert!((equal.ensemble.p0() - 0.64 / 0.68).abs() < 1e-15);
    }

    #[test]
    fn residual_branch_values() {
        let out = phase_residual(&p(3, 0.8), &p(3, 0.6)).unwrap();
        assert!((out.branch_probability - 0.44).abs() < 1e-15);
        assert!((out.ensemble.p0() - 0.32 / 0.44).abs() < 1e-15);
        // Identical inputs leave nothing to distill from the cross branch.
        let equal = phase_residual(&p(3, 0.7), &p(3, 0.7)).unwrap();
        assert!((equal.ensemble.p0() - 0.5).abs() < 1e-15);
        // Distinct inputs always do: p0 > q0 > 1/2 keeps the residual biased.
        let biased = phase_residual(&p(3, 0.9), &p(3, 0.6)).unwrap();
        assert!(*biased.ensemble.p0() > 0.5);
    }

    #[test]
    fn branch_probabilities_partition_and_conserve() {
        for (a, b) in [(0.8, 0.6), (0.55, 0.95), (0.5, 0.5), (1.0, 0.3)] {
            let id = phase_identity(&p(3, a), &p(3, b)).unwrap();
            let cross = phase_residual(&p(3, a), &p(3, b)).unwrap();
            assert!((id.branch_probability + cross.branch_probability - 1.0).abs() < 1e-15);
            let mean = id.branch_probability * id.ensemble.p0()
                + cross.branch_probability * cross.ensemble.p0();
            assert!((mean - a).abs() < 1e-15);
        }
    }

    #[test]
    fn second_round_values() {
        let cross = phase_residual(&p(3, 0.8), &p(3, 0.6)).unwrap();
        let again = phase_second_round(&cross.ensemble).unwrap();
        assert!((again.ensemble.p0() - 0.1024 / 0.1168).abs() < 1e-12);
        assert!((again.ensemble.p0() - 0.876712).abs() < 5e-7);
        let half = phase_second_round(&p(3, 0.5)).unwrap();
        assert_eq!(*half.ensemble.p0(), 0.5);
        let one = phase_second_round(&p(3, 1.0)).unwrap();
        assert_eq!(*one.ensemble.p0(), 1.0);
    }

    #[test]
    fn improvement_predicate() {
        assert!(phase_residual_improves(&0.8, &0.6));
        assert!(!phase_residual_improves(&0.9, &0.9));
        assert!(!phase_residual_improves(&0.8, &0.8));
        // At p1 = 1 the second round only ties the input, so no improvement.
        assert!(!phase_residual_improves(&1.0, &0.6));
        assert!(!phase_residual_improves(&1.0, &1.0));
    }

    #[test]
    fn predicate_matches_direct_comparison() {
        // Exact arithmetic: the grid hits boundary ties such as (0.9, 0.75),
        // where float rounding would pick a side of the strict comparison.
        let r = |num, den| BigRational::from_ratio(num, den);
        for i in 0..=20 {
            for j in 0..=i {
                let a = r(i, 20);
                let b = r(j, 20);
                let ea = PhaseEnsemble::new(3, a.clone()).unwrap();
                let eb = PhaseEnsemble::new(3, b.clone()).unwrap();
                let direct = phase_residual(&ea, &eb)
                    .and_then(|c| phase_second_round(&c.ensemble))
                    .map(|s| *s.ensemble.p0() > a)
                    .unwrap_or(false);
                assert_eq!(phase_residual_improves(&a, &b), direct, "at ({i}/20, {j}/20)");
            }
        }
    }

    #[test]
    fn photon_count_never_enters() {
        let reference = phase_identity(&p(2, 0.8), &p(2, 0.6)).unwrap();
        for n in 3..=6u8 {
            let out = phase_identity(&p(n, 0.8), &p(n, 0.6)).unwrap();
            assert_eq!(out.branch_probability, reference.branch_probability);
            assert_eq!(out.ensemble.p0(), reference.ensemble.p0());
        }
    }

    #[test]
    fn degenerate_branches_are_rejected() {
        assert!(matches!(
            phase_identity(&p(3, 1.0), &p(3, 0.0)),
            Err(Error::DegenerateBranch)
        ));
        assert!(matches!(
            phase_residual(&p(3, 1.0), &p(3, 1.0)),
            Err(Error::DegenerateBranch)
        ));
        assert!(matches!(
            phase_identity(&p(3, 0.5), &p(4, 0.5)),
            Err(Error::PhotonMismatch(3, 4))
        ));
        assert!(PhaseEnsemble::new(3, 1.2).is_err());
    }

    #[test]
    fn exact_arithmetic() {
        let a: PhaseEnsemble<BigRational> = PhaseEnsemble::new(3, BigRational::from_ratio(4, 5)).unwrap();
        let b: PhaseEnsemble<BigRational> = PhaseEnsemble::new(3, BigRational::from_ratio(3, 5)).unwrap();
        let out = phase_identity(&a, &b).unwrap();
        assert_eq!(out.branch_probability, BigRational::from_ratio(14, 25));
        assert_eq!(*out.ensemble.p0(), BigRational::from_ratio(6, 7));
    }

    #[test]
    fn json_roundtrip() {
        let e = p(3, 0.8);
        let back = PhaseEnsemble::from_json(&e.to_json()).unwrap();
        assert_eq!(back, e);
        assert!(PhaseEnsemble::from_json("{\"n\": 3}").is_err());
    }
}
