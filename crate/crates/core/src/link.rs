//! Recycling path: extract entangled subsystems from cross combinations and
//! fuse subsystems that share a party back into larger GHZ-diagonal systems.
//!
//! A cross class splits the photons into an even-parity and an odd-parity
//! set. Keeping photons from one set only (and measuring out the rest in the
//! X basis) leaves a GHZ-diagonal state over the kept photons; a keep-set
//! straddling the two sets has no product structure and is rejected. Two
//! subsystems holding one common party fuse through a parity check and one
//! X measurement; both parity branches fold to the same output, so the fuse
//! is deterministic and its weights are plain products of restrictions.

use crate::ensemble::{GhzDiagonalEnsemble, PurifyOutcome};
use crate::pattern::{pattern_count, ErrorPattern, ParityClass};
use crate::scalar::Scalar;
use crate::{Error, Result, MAX_PHOTONS};

/// A subsystem pulled out of one cross class: which 1-based parties were
/// kept (ascending), the probability of that class, and the normalized
/// ensemble over the kept photons.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemExtract<T = f64> {
    pub kept_parties: Vec<u8>,
    pub branch_probability: T,
    pub ensemble: GhzDiagonalEnsemble<T>,
}

fn validate_keep(n: u8, keep: &[u8]) -> Result<Vec<u8>> {
    if keep.len() < 2 {
        return Err(Error::KeepTooSmall { n });
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    if sorted.iter().any(|&p| p < 1 || p > n) {
        return Err(Error::BadKeepIndex { n });
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadKeepIndex { n });
    }
    Ok(sorted)
}

/// Restricts one cross class to the kept photons. Weight of kept pattern `g`
/// sums `F1_e F2_(e XOR c)` over the full patterns `e` whose restriction to
/// `keep` canonicalizes to `g`; the branch probability is the class total.
pub fn extract_subsystem<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
    class: &ParityClass,
    keep: &[u8],
) -> Result<SubsystemExtract<T>> {
    let n = rho1.n();
    if rho2.n() != n {
        return Err(Error::PhotonMismatch(n, rho2.n()));
    }
    if class.n() != n {
        return Err(Error::PhotonMismatch(class.n(), n));
    }
    if class.is_identity() {
        return Err(Error::IdentityClass);
    }
    let keep = validate_keep(n, keep)?;
    let on_odd_side = class.pattern().flip_on(keep[0]);
    if keep.iter().any(|&p| class.pattern().flip_on(p) != on_odd_side) {
        return Err(Error::MixedParityKeep);
    }
    let c = usize::from(class.index());
    let mut weights = vec![T::zero(); 1 << (keep.len() - 1)];
    let mut total = T::zero();
    for e in 0..rho1.len() {
        let w = rho1.weights()[e].clone() * rho2.weights()[e ^ c].clone();
        let full = ErrorPattern::from_index(n, e as u16)?;
        let g = crate::pattern::restrict(&full, &keep)?;
        weights[usize::from(g.index())] = weights[usize::from(g.index())].clone() + w.clone();
        total = total + w;
    }
    let raw = GhzDiagonalEnsemble::new_unnormalized(keep.len() as u8, weights)?;
    let (ensemble, _) = raw.normalize()?;
    Ok(SubsystemExtract { kept_parties: keep, branch_probability: total, ensemble })
}

/// Picks the extraction for one class when both parity sides are large
/// enough: the side whose subsystem has the larger leading weight (ties keep
/// the even side). Errors when neither side has two photons.
pub fn extract_best<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
    class: &ParityClass,
) -> Result<SubsystemExtract<T>> {
    let mut best: Option<SubsystemExtract<T>> = None;
    for side in [class.even_photons(), class.odd_photons()] {
        if side.len() < 2 {
            continue;
        }
        let candidate = extract_subsystem(rho1, rho2, class, &side)?;
        let better = best
            .as_ref()
            .is_none_or(|b| candidate.ensemble.fidelity() > b.ensemble.fidelity());
        if better {
            best = Some(candidate);
        }
    }
    best.ok_or(Error::KeepTooSmall { n: rho1.n() })
}

/// Probability-weighted mixture of the per-class best extracts, paired with
/// the total probability that a round lands in any extractable cross class.
/// `None` when no cross class can occur (pure inputs on both sides). All
/// extracts must agree on photon count, which always holds for three-photon
/// inputs; a mixture over unequal extract sizes is ill-defined and reports
/// the first mismatch instead.
pub fn extract_mixture<T: Scalar>(
    rho1: &GhzDiagonalEnsemble<T>,
    rho2: &GhzDiagonalEnsemble<T>,
) -> Result<Option<(T, GhzDiagonalEnsemble<T>)>> {
    let mut total = T::zero();
    let mut mixed: Option<(u8, Vec<T>)> = None;
    for c in 1..pattern_count(rho1.n()) {
        let class = ParityClass::from_index(rho1.n(), c)?;
        let ext = match extract_best(rho1, rho2, &class) {
            Ok(ext) => ext,
            Err(Error::DegenerateBranch) => continue,
            Err(e) => return Err(e),
        };
        let (nprime, weights) = mixed.get_or_insert_with(|| {
            (ext.ensemble.n(), vec![T::zero(); ext.ensemble.len()])
        });
        if ext.ensemble.n() != *nprime {
            return Err(Error::PhotonMismatch(*nprime, ext.ensemble.n()));
        }
        for (slot, w) in weights.iter_mut().zip(ext.ensemble.weights()) {
            *slot = slot.clone() + ext.branch_probability.clone() * w.clone();
        }
        total = total + ext.branch_probability;
    }
    match mixed {
        None => Ok(None),
        Some((nprime, raw)) => {
            let (mixture, _) = GhzDiagonalEnsemble::new_unnormalized(nprime, raw)?.normalize()?;
            Ok(Some((total, mixture)))
        }
    }
}

/// Fuses two GHZ-diagonal systems that share a party into one system over
/// `na + nb - 1` photons. `shared_a`/`shared_b` are the 1-based positions of
/// the shared party in each input. Output photon order: all of system A,
/// then system B with its shared photon dropped. The weight of output
/// pattern `g` is the product of the input weights at `g`'s restrictions to
/// each system (the shared photon's bit read from its position in A); the
/// step is deterministic, so the outcome probability is 1 for normalized
/// inputs.
pub fn entanglement_link<T: Scalar>(
    sys_a: &GhzDiagonalEnsemble<T>,
    sys_b: &GhzDiagonalEnsemble<T>,
    shared_a: u8,
    shared_b: u8,
) -> Result<PurifyOutcome<T>> {
    let (na, nb) = (sys_a.n(), sys_b.n());
    if shared_a < 1 || shared_a > na {
        return Err(Error::BadKeepIndex { n: na });
    }
    if shared_b < 1 || shared_b > nb {
        return Err(Error::BadKeepIndex { n: nb });
    }
    let n_out = na + nb - 1;
    if n_out > MAX_PHOTONS {
        return Err(Error::PhotonCount(n_out, MAX_PHOTONS));
    }
    let mut weights = Vec::with_capacity(usize::from(pattern_count(n_out)));
    for g in 0..pattern_count(n_out) {
        let out = ErrorPattern::from_index(n_out, g)?;
        let mut a_bits = 0u16;
        for photon in 1..=na {
            a_bits = a_bits << 1 | u16::from(out.flip_on(photon));
        }
        let mut b_bits = 0u16;
        let mut next = na + 1;
        for photon in 1..=nb {
            let bit = if photon == shared_b {
                out.flip_on(shared_a)
            } else {
                let v = out.flip_on(next);
                next += 1;
                v
            };
            b_bits = b_bits << 1 | u16::from(bit);
        }
        let pa = ErrorPattern::canonicalize(na, a_bits)?;
        let pb = ErrorPattern::canonicalize(nb, b_bits)?;
        weights.push(sys_a.weight(pa.index()).clone() * sys_b.weight(pb.index()).clone());
    }
    let raw = GhzDiagonalEnsemble::new_unnormalized(n_out, weights)?;
    let total = raw.total();
    let (ensemble, _) = raw.normalize()?;
    Ok(PurifyOutcome { branch_probability: total, ensemble })
}

/// Fuses two extracts by their party labels; they must hold exactly one
/// party in common. Returns the output photon's party labels (system A's
/// order, then system B's remainder) with the fused outcome.
pub fn link_extracts<T: Scalar>(
    a: &SubsystemExtract<T>,
    b: &SubsystemExtract<T>,
) -> Result<(Vec<u8>, PurifyOutcome<T>)> {
    let shared: Vec<u8> =
        a.kept_parties.iter().copied().filter(|p| b.kept_parties.contains(p)).collect();
    if shared.len() != 1 {
        return Err(Error::SharedParties { got: shared.len() });
    }
    let pos_a = a.kept_parties.iter().position(|&p| p == shared[0]).expect("present") as u8 + 1;
    let pos_b = b.kept_parties.iter().position(|&p| p == shared[0]).expect("present") as u8 + 1;
    let mut parties = a.kept_parties.clone();
    parties.extend(b.kept_parties.iter().copied().filter(|&p| p != shared[0]));
    let outcome = entanglement_link(&a.ensemble, &b.ensemble, pos_a, pos_b)?;
    Ok((parties, outcome))
}

/// True when fusing the two-photon extracts of symmetric three-photon
/// inputs strictly beats the first input's fidelity.
pub fn link_improves<T: Scalar>(f1: &T, f2: &T) -> Result<bool> {
    for f in [f1, f2] {
        if *f < T::zero() || *f > T::one() {
            return Err(Error::ProbabilityRange(f.to_f64()));
        }
    }
    Ok(linked_fidelity(f1, f2) > f1.clone())
}

/// Fidelity of the three-photon system regenerated from the two-photon
/// extracts of symmetric inputs: the square of the extract fidelity
/// `3(f1 + f2 - 2 f1 f2) / (f1 + f2 - 4 f1 f2 + 2)`. Both inputs pure is a
/// degenerate limit (no cross combinations to extract from); it returns 1
/// by continuity.
pub fn linked_fidelity<T: Scalar>(f1: &T, f2: &T) -> T {
    let num = f1.clone() + f2.clone()
        - T::from_ratio(2, 1) * f1.clone() * f2.clone();
    let den = f1.clone() + f2.clone() - T::from_ratio(4, 1) * f1.clone() * f2.clone()
        + T::from_ratio(2, 1);
    if den.is_zero() {
        return T::one();
    }
    let root = T::from_ratio(3, 1) * num / den;
    root.clone() * root
}

/// Subsystem sizes the extraction can reach from an `n`-photon cross class:
/// the larger parity side always holds at least `floor((n+1)/2)` photons,
/// and at most `n - 1` (a cross class has photons on both sides).
pub fn nprime_range(n: u8) -> Result<(u8, u8)> {
    if n < 3 {
        return Err(Error::KeepTooSmall { n });
    }
    Ok((n.div_ceil(2), n - 1))
}
