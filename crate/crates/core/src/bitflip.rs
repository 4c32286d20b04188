//! Bit-flip purification rounds on pairs of GHZ-diagonal ensembles.
//!
//! One round compares the two systems photon by photon with parity checks.
//! The all-even outcome class keeps pairs whose error patterns matched (the
//! identity combination); every other class collects the cross combinations
//! whose patterns differ by that class. In canonical indices the algebra is
//! uniform: outcome class `c` pairs weight `m` of the first system with
//! weight `m XOR c` of the second, so each branch is a product measure that
//! only needs normalizing.

use crate::ensemble::{GhzDiagonalEnsemble, PurifyOutcome};
use crate::pattern::{check_photon_count, pattern_count, ParityClass};
use crate::scalar::Scalar;
use crate::{Error, Result};

fn check_same_n<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
) -> Result<()> {
    if rho1.n() != rho2.n() {
        return Err(Error::PhotonMismatch(rho1.n(), rho2.n()));
    }
    Ok(())
}

/// Unnormalized weights and total of the outcome class with index `c`.
fn raw_class<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
    c: u16,
) -> (Vec<T>, T) {
    let weights: Vec<T> = (0..rho1.len())
        .map(|m| rho1.weights()[m].clone() * rho2.weights()[m ^ usize::from(c)].clone())
        .collect();
    let total = weights.iter().fold(T::zero(), |acc, w| acc + w.clone());
    (weights, total)
}

/// Keeps the identity combinations of one round: the kept system's weights
/// become the normalized products of matching components. The branch
/// probability is the product sum (the round's per-pair success rate).
pub fn purify_identity<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
) -> Result<PurifyOutcome<T>> {
    check_same_n(rho1, rho2)?;
    let (weights, total) = raw_class(rho1, rho2, 0);
    let raw = GhzDiagonalEnsemble::new_unnormalized(rho1.n(), weights)?;
    let (ensemble, _) = raw.normalize()?;
    Ok(PurifyOutcome { branch_probability: total, ensemble })
}

/// True when the identity branch strictly beats the larger input fidelity.
///
/// Evaluated in the cross-multiplied form `F2_0 (1 - F1_0) > sum_{m>=1}
/// F1_m F2_m` (inputs ordered so system 1 has the larger fidelity), which
/// never divides and so is boundary-safe; tests check it against comparing
/// [`purify_identity`]'s output directly.
pub fn identity_improves<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
) -> Result<bool> {
    check_same_n(rho1, rho2)?;
    let (a, b) = if rho1.fidelity() >= rho2.fidelity() { (rho1, rho2) } else { (rho2, rho1) };
    let lhs = b.fidelity().clone() * (T::one() - a.fidelity().clone());
    let rhs = (1..a.len()).fold(T::zero(), |acc, m| {
        acc + a.weights()[m].clone() * b.weights()[m].clone()
    });
    Ok(lhs > rhs)
}

/// Fidelity floor for the weaker of two symmetric inputs: below `1/2^(n-1)`
/// the identity branch cannot improve on the stronger input, whatever its
/// fidelity; at the floor it exactly ties.
pub fn symmetric_identity_threshold<T: Scalar>(n: u8) -> Result<T> {
    check_photon_count(n)?;
    Ok(T::from_ratio(1, 1i64 << (n - 1)))
}

/// One cross-combination class of a round, unrelabeled: weight `m` is
/// `F1_m F2_(m XOR c)`, normalized. Callers re-purifying this branch move its
/// heaviest pattern to index 0 first (`argmax_to_zero`); callers checking the
/// fidelity conservation identity need the raw labels kept.
pub fn cross_residual<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
    class: &ParityClass,
) -> Result<PurifyOutcome<T>> {
    check_same_n(rho1, rho2)?;
    if class.n() != rho1.n() {
        return Err(Error::PhotonMismatch(class.n(), rho1.n()));
    }
    if class.is_identity() {
        return Err(Error::IdentityClass);
    }
    let (weights, total) = raw_class(rho1, rho2, class.index());
    let raw = GhzDiagonalEnsemble::new_unnormalized(rho1.n(), weights)?;
    let (ensemble, _) = raw.normalize()?;
    Ok(PurifyOutcome { branch_probability: total, ensemble })
}

/// Every outcome class of one round with nonzero probability, identity
/// first. The branch probabilities sum to 1.
pub fn class_outcomes<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
) -> Result<Vec<(ParityClass, PurifyOutcome<T>)>> {
    check_same_n(rho1, rho2)?;
    let mut out = Vec::new();
    for c in 0..pattern_count(rho1.n()) {
        let (weights, total) = raw_class(rho1, rho2, c);
        if total.is_zero() {
            continue;
        }
        let raw = GhzDiagonalEnsemble::new_unnormalized(rho1.n(), weights)?;
        let (ensemble, _) = raw.normalize()?;
        out.push((
            ParityClass::from_index(rho1.n(), c)?,
            PurifyOutcome { branch_probability: total, ensemble },
        ));
    }
    Ok(out)
}

/// Re-purifies two copies of a cross residual (relabeled or kept on the
/// class's reference labels). This is identity purification again; the alias
/// marks call sites that implement the second-round recycling path.
pub fn second_round<T: Scalar>(
    rho_a: &GhzDiagonalEnsemble<T>,
    rho_b: &GhzDiagonalEnsemble<T>,
) -> Result<PurifyOutcome<T>> {
    purify_identity(rho_a, rho_b)
}

/// True when recycling cross combinations pays: the best cross class,
/// relabeled and re-purified against itself, must strictly beat the larger
/// input fidelity. Pure inputs have no cross branches and return false.
pub fn residual_improves<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
) -> Result<bool> {
    check_same_n(rho1, rho2)?;
    let baseline =
        if rho1.fidelity() >= rho2.fidelity() { rho1.fidelity() } else { rho2.fidelity() };
    let mut best: Option<T> = None;
    for (class, outcome) in class_outcomes(rho1, rho2)? {
        if class.is_identity() {
            continue;
        }
        let (relabeled, _) = outcome.ensemble.argmax_to_zero();
        let again = second_round(&relabeled, &relabeled)?;
        let f = again.ensemble.fidelity().clone();
        if best.as_ref().is_none_or(|b| f > *b) {
            best = Some(f);
        }
    }
    Ok(best.is_some_and(|f| f > *baseline))
}

/// Best relabeling of a symmetric cross residual. The class ensemble has
/// only three distinct weights; moving each to index 0 gives fidelity
/// candidates proportional to `k f1 (1-f2)`, `k f2 (1-f1)` and
/// `(1-f1)(1-f2)` with `k = 2^(n-1) - 1`. The third weight sits on `k - 1`
/// patterns, so the shared denominator is `k f1 (1-f2) + k f2 (1-f1) +
/// (k-1)(1-f1)(1-f2)`. Returns the 1-based choice (ties pick the smaller)
/// and its value. Both inputs pure is a degenerate limit (the class never
/// occurs) and returns `(1, 1)`.
pub fn three_choices<T: Scalar>(n: u8, f1: &T, f2: &T) -> Result<(u8, T)> {
    check_photon_count(n)?;
    for f in [f1, f2] {
        if *f < T::zero() || *f > T::one() {
            return Err(Error::ProbabilityRange(f.to_f64()));
        }
    }
    let k = T::from_ratio((1i64 << (n - 1)) - 1, 1);
    let q1 = T::one() - f1.clone();
    let q2 = T::one() - f2.clone();
    let nums = [
        k.clone() * f1.clone() * q2.clone(),
        k.clone() * f2.clone() * q1.clone(),
        q1 * q2,
    ];
    let den = nums[0].clone() + nums[1].clone() + (k - T::one()) * nums[2].clone();
    if den.is_zero() {
        return Ok((1, T::one()));
    }
    let mut choice = 0usize;
    for (i, v) in nums.iter().enumerate().skip(1) {
        if *v > nums[choice] {
            choice = i;
        }
    }
    Ok((choice as u8 + 1, nums[choice].clone() / den))
}
