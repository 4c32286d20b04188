//! First-principles re-derivations of every purification branch.
//!
//! Each protocol is spelled out as an explicit circuit on `2N` photons (two
//! systems of `N`), executed over all measurement branches, with the
//! resulting ensembles read back in the GHZ basis. Nothing here shares code
//! with the closed-form modules; agreement between the two is asserted in
//! tests rather than assumed.

use super::circuit::{run_branches, CircuitOp, CircuitSpec, Gate, Predicate};
use super::state::PureState;
use crate::ensemble::GhzDiagonalEnsemble;
use crate::pattern::{pattern_count, ErrorPattern, ParityClass};
use crate::phaseflip::PhaseEnsemble;
use crate::scalar::Scalar;
use crate::{Error, Result, MAX_ORACLE_PHOTONS};
/// One parity class of a purification step as derived by the oracle.
#[derive(Debug, Clone)]
pub struct ClassBranch<T = f64> {
    pub class: ParityClass,
    pub probability: T,
    pub ensemble: GhzDiagonalEnsemble<T>,
}

/// Transversal parity comparison of two N-photon systems followed by X
/// measurements of the second system, with the sign folded back by a
/// conditional Z on the first system.
pub fn purify_circuit(n: u8) -> CircuitSpec {
    let n = usize::from(n);
    let mut ops: Vec<CircuitOp> = (0..n).map(|k| CircuitOp::ParityCheck(k, n + k)).collect();
    ops.extend((0..n).map(|k| CircuitOp::MeasureX(n + k)));
    ops.push(CircuitOp::When(Predicate::OddCount((n..2 * n).collect()), Gate::Z(0)));
    CircuitSpec { n_qubits: 2 * n, ops }
}

/// Like [`purify_circuit`], but also measures out the first-system photons
/// not listed in `keep` (1-based), leaving a smaller entangled subsystem.
pub fn extract_circuit(n: u8, keep: &[u8]) -> CircuitSpec {
    let n = usize::from(n);
    let mut ops: Vec<CircuitOp> = (0..n).map(|k| CircuitOp::ParityCheck(k, n + k)).collect();
    let mut measured = Vec::new();
    for q in 0..n {
        if !keep.contains(&((q + 1) as u8)) {
            measured.push(q);
        }
    }
    measured.extend(n..2 * n);
    let x_ordinals: Vec<usize> = (n..n + measured.len()).collect();
    ops.extend(measured.into_iter().map(CircuitOp::MeasureX));
    let fold = usize::from(keep[0]) - 1;
    ops.push(CircuitOp::When(Predicate::OddCount(x_ordinals), Gate::Z(fold)));
    CircuitSpec { n_qubits: 2 * n, ops }
}

/// Fuses two subsystems that share one party: parity check between the two
/// shared photons, X flips of the whole second system on the odd outcome,
/// then an X measurement of the second shared photon with a Z fold.
///
/// Qubits `0..na` hold the first subsystem, `na..na+nb` the second;
/// `shared_a`/`shared_b` are the two photons held by the common party.
pub fn link_circuit(na: usize, nb: usize, shared_a: usize, shared_b: usize) -> CircuitSpec {
    let mut ops = vec![CircuitOp::ParityCheck(shared_a, shared_b)];
    for q in na..na + nb {
        ops.push(CircuitOp::When(Predicate::Equals(0, 1), Gate::X(q)));
    }
    ops.push(CircuitOp::MeasureX(shared_b));
    ops.push(CircuitOp::When(Predicate::OddCount(vec![1]), Gate::Z(shared_a)));
    CircuitSpec { n_qubits: na + nb, ops }
}

/// Phase-purification round: parity comparison, X flips of the second system
/// wherever the outcome was odd, X measurements of the second system with
/// per-photon Z folds, and a closing Hadamard on each first-system photon.
pub fn phase_circuit(n: u8) -> CircuitSpec {
    let n = usize::from(n);
    let mut ops: Vec<CircuitOp> = (0..n).map(|k| CircuitOp::ParityCheck(k, n + k)).collect();
    for k in 0..n {
        ops.push(CircuitOp::When(Predicate::Equals(k, 1), Gate::X(n + k)));
    }
    ops.extend((0..n).map(|k| CircuitOp::MeasureX(n + k)));
    for k in 0..n {
        ops.push(CircuitOp::When(Predicate::Equals(n + k, 1), Gate::Z(k)));
    }
    ops.extend((0..n).map(|k| CircuitOp::Unitary(Gate::H(k))));
    CircuitSpec { n_qubits: 2 * n, ops }
}

fn check_oracle_size(n: u8) -> Result<()> {
    if !(2..=MAX_ORACLE_PHOTONS).contains(&n) {
        return Err(Error::PhotonCount(n, MAX_ORACLE_PHOTONS));
    }
    Ok(())
}

fn parity_pattern(n: u8, outcomes: &[u8]) -> Result<ParityClass> {
    let mut bits = 0u16;
    for &o in &outcomes[..usize::from(n)] {
        bits = bits << 1 | u16::from(o);
    }
    ParityClass::from_index(n, ErrorPattern::canonicalize(n, bits)?.index())
}

struct ClassAccum<T> {
    probability: T,
    weights: Vec<T>,
}

/// Derives every parity-class branch of one bit-flip purification round by
/// enumerating the pure GHZ components of both ensembles. Classes with zero
/// branch probability are omitted.
pub fn oracle_bitflip<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
) -> Result<Vec<ClassBranch<T>>> {
    let n = rho1.n();
    if rho2.n() != n {
        return Err(Error::PhotonMismatch(n, rho2.n()));
    }
    check_oracle_size(n)?;
    let count = usize::from(pattern_count(n));
    let circuit = purify_circuit(n);
    let subset: Vec<usize> = (0..usize::from(n)).collect();
    let mut accum: Vec<ClassAccum<T>> = (0..count)
        .map(|_| ClassAccum { probability: T::zero(), weights: vec![T::zero(); count] })
        .collect();
    for e in 0..count {
        for f in 0..count {
            let w = rho1.weights()[e].clone() * rho2.weights()[f].clone();
            if w.is_zero() {
                continue;
            }
            let state: PureState<T> =
                PureState::ghz(n, e as u16, true).kron(&PureState::ghz(n, f as u16, true));
            for branch in run_branches(&circuit, &state)? {
                let class = parity_pattern(n, &branch.outcomes)?;
                let slot = &mut accum[usize::from(class.index())];
                slot.probability = slot.probability.clone() + w.clone() * branch.probability;
                for (m, plus, minus) in branch.state.ghz_weights(&subset)? {
                    if !T::close(&minus, &T::zero()) {
                        return Err(Error::OracleInconsistency(format!(
                            "sign fold left a - component on pattern {m} of class {}",
                            class.label()
                        )));
                    }
                    slot.weights[usize::from(m)] =
                        slot.weights[usize::from(m)].clone() + w.clone() * plus;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (c, slot) in accum.into_iter().enumerate() {
        if slot.probability.is_zero() {
            continue;
        }
        let raw = GhzDiagonalEnsemble::new_unnormalized(n, slot.weights)?;
        let (ensemble, total) = raw.normalize()?;
        if !T::close(&total, &slot.probability) {
            return Err(Error::OracleInconsistency(format!(
                "class weights sum to {:?}, branch probability is {:?}",
                total, slot.probability
            )));
        }
        out.push(ClassBranch {
            class: ParityClass::from_index(n, c as u16)?,
            probability: slot.probability,
            ensemble,
        });
    }
    Ok(out)
}

/// Derives the subsystem ensemble extracted from one cross parity class by
/// measuring out everything but the 1-based photons in `keep`. Returns the
/// class branch probability with the normalized subsystem ensemble.
pub fn oracle_extract<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
    class: &ParityClass,
    keep: &[u8],
) -> Result<(T, GhzDiagonalEnsemble<T>)> {
    let n = rho1.n();
    if rho2.n() != n {
        return Err(Error::PhotonMismatch(n, rho2.n()));
    }
    check_oracle_size(n)?;
    if class.n() != n {
        return Err(Error::PhotonMismatch(class.n(), n));
    }
    let count = usize::from(pattern_count(n));
    let circuit = extract_circuit(n, keep);
    let subset: Vec<usize> = keep.iter().map(|&p| usize::from(p) - 1).collect();
    let out_count = 1usize << (keep.len() - 1);
    let mut probability = T::zero();
    let mut weights = vec![T::zero(); out_count];
    for e in 0..count {
        for f in 0..count {
            let w = rho1.weights()[e].clone() * rho2.weights()[f].clone();
            if w.is_zero() {
                continue;
            }
            let state: PureState<T> =
                PureState::ghz(n, e as u16, true).kron(&PureState::ghz(n, f as u16, true));
            for branch in run_branches(&circuit, &state)? {
                if parity_pattern(n, &branch.outcomes)? != *class {
                    continue;
                }
                probability = probability.clone() + w.clone() * branch.probability;
                for (m, plus, minus) in branch.state.ghz_weights(&subset)? {
                    if !T::close(&minus, &T::zero()) {
                        return Err(Error::OracleInconsistency(
                            "sign fold left a - component in an extracted subsystem".into(),
                        ));
                    }
                    weights[usize::from(m)] = weights[usize::from(m)].clone() + w.clone() * plus;
                }
            }
        }
    }
    let raw = GhzDiagonalEnsemble::new_unnormalized(keep.len() as u8, weights)?;
    let (ensemble, _) = raw.normalize()?;
    Ok((probability, ensemble))
}

/// Derives the fused ensemble of two subsystems (sizes `na`, `nb`) joined at
/// one shared party. `shared_a`/`shared_b` index the shared photon within
/// each subsystem (0-based). Both parity outcomes fold to the same result,
/// so the fused ensemble is returned alone; the step is deterministic.
pub fn oracle_link<T: Scalar>(
    sys_a: &GhzDiagonalEnsemble<T>,
    sys_b: &GhzDiagonalEnsemble<T>,
    shared_a: usize,
    shared_b: usize,
) -> Result<GhzDiagonalEnsemble<T>> {
    let (na, nb) = (usize::from(sys_a.n()), usize::from(sys_b.n()));
    let n_out = (na + nb - 1) as u8;
    check_oracle_size(n_out)?;
    let circuit = link_circuit(na, nb, shared_a, na + shared_b);
    // Output photon order: first subsystem, then the second with its shared
    // photon dropped.
    let mut subset: Vec<usize> = (0..na).collect();
    subset.extend((na..na + nb).filter(|&q| q != na + shared_b));
    let out_count = 1usize << (na + nb - 2);
    let mut weights = vec![T::zero(); out_count];
    let mut total = T::zero();
    for p in 0..usize::from(pattern_count(sys_a.n())) {
        for q in 0..usize::from(pattern_count(sys_b.n())) {
            let w = sys_a.weights()[p].clone() * sys_b.weights()[q].clone();
            if w.is_zero() {
                continue;
            }
            let state: PureState<T> = PureState::ghz(sys_a.n(), p as u16, true)
                .kron(&PureState::ghz(sys_b.n(), q as u16, true));
            for branch in run_branches(&circuit, &state)? {
                total = total.clone() + w.clone() * branch.probability;
                for (m, plus, minus) in branch.state.ghz_weights(&subset)? {
                    if !T::close(&minus, &T::zero()) {
                        return Err(Error::OracleInconsistency(
                            "sign fold left a - component after linking".into(),
                        ));
                    }
                    weights[usize::from(m)] = weights[usize::from(m)].clone() + w.clone() * plus;
                }
            }
        }
    }
    if !T::close(&total, &T::one()) {
        return Err(Error::OracleInconsistency(format!(
            "link branches sum to {total:?}, expected 1"
        )));
    }
    let raw = GhzDiagonalEnsemble::new_unnormalized(n_out, weights)?;
    let (ensemble, _) = raw.normalize()?;
    Ok(ensemble)
}

/// Derives both branches of one phase purification round. Returns
/// `(identity, cross)` as branch probability plus normalized two-weight
/// ensemble.
#[allow(clippy::type_complexity)]
pub fn oracle_phase<T: Scalar>(
    p1: &PhaseEnsemble<T>,
    p2: &PhaseEnsemble<T>,
) -> Result<[(T, PhaseEnsemble<T>); 2]> {
    let n = p1.n();
    if p2.n() != n {
        return Err(Error::PhotonMismatch(n, p2.n()));
    }
    check_oracle_size(n)?;
    let circuit = phase_circuit(n);
    let subset: Vec<usize> = (0..usize::from(n)).collect();
    // [identity, cross] accumulators of (probability, plus at 0, minus at 0).
    let mut acc = [
        (T::zero(), T::zero(), T::zero()),
        (T::zero(), T::zero(), T::zero()),
    ];
    for (s1, w1) in [(true, p1.p0().clone()), (false, p1.p1())] {
        for (s2, w2) in [(true, p2.p0().clone()), (false, p2.p1())] {
            let w = w1.clone() * w2;
            if w.is_zero() {
                continue;
            }
            let state: PureState<T> = PureState::parity_superposition(n, s1)
                .kron(&PureState::parity_superposition(n, s2));
            for branch in run_branches(&circuit, &state)? {
                let odd: u32 = branch.outcomes[..usize::from(n)].iter().map(|&v| u32::from(v)).sum();
                let slot = &mut acc[usize::from(odd % 2 == 1)];
                slot.0 = slot.0.clone() + w.clone() * branch.probability;
                for (m, plus, minus) in branch.state.ghz_weights(&subset)? {
                    if m == 0 {
                        slot.1 = slot.1.clone() + w.clone() * plus;
                        slot.2 = slot.2.clone() + w.clone() * minus;
                    } else if !T::close(&plus, &T::zero()) || !T::close(&minus, &T::zero()) {
                        return Err(Error::OracleInconsistency(
                            "phase round left weight outside the two-weight basis".into(),
                        ));
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for (prob, w_plus, w_minus) in acc {
        let total = w_plus.clone() + w_minus.clone();
        if !T::close(&total, &prob) {
            return Err(Error::OracleInconsistency(format!(
                "phase weights sum to {total:?}, branch probability is {prob:?}"
            )));
        }
        if prob.is_zero() {
            out.push((prob, PhaseEnsemble::new(n, T::zero())?));
        } else {
            out.push((prob.clone(), PhaseEnsemble::new(n, w_plus / prob)?));
        }
    }
    Ok([out[0].clone(), out[1].clone()])
}
