//! Scheme-level figures of merit for symmetric three-photon inputs: closed
//! forms for the yields and fidelities of the conventional scheme (keep the
//! identity branch, regenerate fresh systems from two-photon extracts) and
//! the recycling scheme (re-purify cross residuals), report builders that
//! compose the per-round operations, the multiround trade-off between the
//! two recycling routes, and region sweeps over the input-fidelity square.
//!
//! Scheme-level quantities keep every cross class on its inherited reference
//! labels (the first of the three relabelings), which is what the quoted
//! closed forms describe and what makes the equal-input comparison come out
//! in favor of extract-and-fuse. [`crate::bitflip::three_choices`] and
//! [`crate::bitflip::residual_improves`] probe the alternative relabelings
//! where they pay.

use crate::bitflip::{cross_residual, identity_improves, purify_identity, second_round, three_choices};
use crate::ensemble::GhzDiagonalEnsemble;
use crate::link::{
    entanglement_link, extract_best, extract_mixture, extract_subsystem, link_extracts,
    link_improves,
};
use crate::oracle::{oracle_bitflip, oracle_extract, oracle_link, oracle_phase};
use crate::par::par_map;
use crate::pattern::{pattern_count, ParityClass};
use crate::phaseflip::{phase_identity, phase_residual, PhaseEnsemble};
use crate::scalar::Scalar;
use crate::{Error, Result, MAX_ORACLE_PHOTONS};
use serde::Serialize;
use std::fmt;

pub(crate) fn unit_range<T: Scalar>(f: &T) -> Result<()> {
    if *f < T::zero() || *f > T::one() {
        return Err(Error::ProbabilityRange(f.to_f64()));
    }
    Ok(())
}

fn sym_pair<T: Scalar>(
    f1: &T,
    f2: &T,
) -> Result<(GhzDiagonalEnsemble<T>, GhzDiagonalEnsemble<T>)> {
    unit_range(f1)?;
    unit_range(f2)?;
    Ok((
        GhzDiagonalEnsemble::symmetric(3, f1.clone())?,
        GhzDiagonalEnsemble::symmetric(3, f2.clone())?,
    ))
}

/// Literal closed forms for one round on symmetric three-photon inputs with
/// leading weights `f1`, `f2`. Degenerate points where a branch cannot occur
/// are noted per function; everywhere else these match the composed
/// operations to working precision (exactly in rational mode).
pub mod closed_form {
    use crate::scalar::Scalar;

    pub use crate::link::linked_fidelity;

    fn r<T: Scalar>(num: i64, den: i64) -> T {
        T::from_ratio(num, den)
    }

    /// Probability of the identity (all patterns matched) branch.
    pub fn identity_yield<T: Scalar>(f1: &T, f2: &T) -> T {
        (T::one() - f1.clone() - f2.clone() + r::<T>(4, 1) * f1.clone() * f2.clone()) / r(3, 1)
    }

    /// Probability of landing in any cross class; complements
    /// [`identity_yield`].
    pub fn cross_probability<T: Scalar>(f1: &T, f2: &T) -> T {
        (r::<T>(2, 1) + f1.clone() + f2.clone() - r::<T>(4, 1) * f1.clone() * f2.clone())
            / r(3, 1)
    }

    /// Fidelity of the identity branch; 0 at the corners `(1, 0)`/`(0, 1)`
    /// where the branch never occurs.
    pub fn identity_fidelity<T: Scalar>(f1: &T, f2: &T) -> T {
        let den =
            T::one() - f1.clone() - f2.clone() + r::<T>(4, 1) * f1.clone() * f2.clone();
        if den.is_zero() {
            return T::zero();
        }
        r::<T>(3, 1) * f1.clone() * f2.clone() / den
    }

    /// Fidelity of the two-photon extract of one cross class; 1 at the
    /// degenerate pure-pure corner where no cross events exist.
    pub fn extract_fidelity<T: Scalar>(f1: &T, f2: &T) -> T {
        let num = r::<T>(3, 1)
            * (f1.clone() + f2.clone() - r::<T>(2, 1) * f1.clone() * f2.clone());
        let den = f1.clone() + f2.clone() - r::<T>(4, 1) * f1.clone() * f2.clone()
            + r::<T>(2, 1);
        if den.is_zero() {
            return T::one();
        }
        num / den
    }

    /// Yield of the conventional scheme: the identity branch plus one fused
    /// system per two cross events.
    pub fn p1_yield<T: Scalar>(f1: &T, f2: &T) -> T {
        (r::<T>(2, 1) - (f1.clone() + f2.clone()) / r::<T>(2, 1)
            + r::<T>(2, 1) * f1.clone() * f2.clone())
            / r(3, 1)
    }

    /// Yield-weighted output fidelity of the conventional scheme.
    pub fn p1_fidelity<T: Scalar>(f1: &T, f2: &T) -> T {
        let linked = identity_fidelity(f1, f2) * identity_yield(f1, f2)
            + linked_fidelity(f1, f2) * cross_probability(f1, f2) / r::<T>(2, 1);
        linked / p1_yield(f1, f2)
    }

    /// Probability of one specific cross class (all three are equal for
    /// symmetric inputs).
    pub fn class_yield<T: Scalar>(f1: &T, f2: &T) -> T {
        let q1 = T::one() - f1.clone();
        let q2 = T::one() - f2.clone();
        (f1.clone() * q2.clone() + f2.clone() * q1.clone()) / r::<T>(3, 1)
            + r::<T>(2, 9) * q1 * q2
    }

    /// Fidelity of a cross residual on its reference labels; 1 at the
    /// degenerate pure-pure corner.
    pub fn residual_fidelity<T: Scalar>(f1: &T, f2: &T) -> T {
        let num = r::<T>(3, 1) * f1.clone() * (T::one() - f2.clone());
        let den = f1.clone() + f2.clone() - r::<T>(4, 1) * f1.clone() * f2.clone()
            + r::<T>(2, 1);
        if den.is_zero() {
            return T::one();
        }
        num / den
    }

    /// Fidelity after re-purifying two copies of the residual against each
    /// other; 1 at the degenerate pure-pure corner.
    pub fn second_round_fidelity<T: Scalar>(f1: &T, f2: &T) -> T {
        let q1 = T::one() - f1.clone();
        let q2 = T::one() - f2.clone();
        let a = r::<T>(9, 1) * f1.clone() * f1.clone() * q2.clone() * q2.clone();
        let b = r::<T>(9, 1) * f2.clone() * f2.clone() * q1.clone() * q1.clone();
        let c = r::<T>(2, 1) * q1.clone() * q1 * q2.clone() * q2;
        let den = a.clone() + b + c;
        if den.is_zero() {
            return T::one();
        }
        a / den
    }

    /// Success probability of the residual second round, per pair of
    /// first-round input pairs (both pairs must land in the class, then the
    /// re-purification must keep the identity branch).
    pub fn second_round_pass<T: Scalar>(f1: &T, f2: &T) -> T {
        let q1 = T::one() - f1.clone();
        let q2 = T::one() - f2.clone();
        let u = f1.clone() * q2.clone();
        let v = f2.clone() * q1.clone();
        let w = q1 * q2;
        (u.clone() * u + v.clone() * v) / r::<T>(9, 1) + r::<T>(2, 81) * w.clone() * w
    }

    /// Yield of the recycling scheme: identity branch plus the second-round
    /// returns of all three cross classes.
    pub fn p1prime_yield<T: Scalar>(f1: &T, f2: &T) -> T {
        identity_yield(f1, f2)
            + r::<T>(3, 2) * class_yield(f1, f2) * second_round_pass(f1, f2)
    }

    /// Yield-weighted output fidelity of the recycling scheme.
    pub fn p1prime_fidelity<T: Scalar>(f1: &T, f2: &T) -> T {
        let num = identity_fidelity(f1, f2) * identity_yield(f1, f2)
            + second_round_fidelity(f1, f2)
                * r::<T>(3, 2)
                * class_yield(f1, f2)
                * second_round_pass(f1, f2);
        num / p1prime_yield(f1, f2)
    }

    /// Strict-improvement test for the residual second round against the
    /// first input, in cross-multiplied form `9 f1 (1-f2)^2 > (11 f2^2 -
    /// 4 f2 + 2)(1-f1)` that never divides. False at `f1 = 1`, where no
    /// mixed residual can reach a pure target.
    pub fn residual_round_improves<T: Scalar>(f1: &T, f2: &T) -> bool {
        if *f1 >= T::one() {
            return false;
        }
        let q1 = T::one() - f1.clone();
        let q2 = T::one() - f2.clone();
        let lhs = r::<T>(9, 1) * f1.clone() * q2.clone() * q2;
        let rhs = (r::<T>(11, 1) * f2.clone() * f2.clone() - r::<T>(4, 1) * f2.clone()
            + r::<T>(2, 1))
            * q1;
        lhs > rhs
    }
}

/// Preferred recycling route of the two-round comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Extract-and-fuse wins.
    P1,
    /// Residual re-purification wins.
    #[serde(rename = "P1'")]
    P1Prime,
    /// Equal within comparison tolerance (exact equality in rational mode).
    #[serde(rename = "tie")]
    Tie,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::P1 => "P1",
            Scheme::P1Prime => "P1'",
            Scheme::Tie => "tie",
        })
    }
}

/// One kept branch of a scheme: its expected share per input pair and the
/// fidelity of what it delivers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeComponent<T = f64> {
    pub label: String,
    pub probability: T,
    pub fidelity: T,
}

/// Scheme summary: total yield per input pair and the yield-weighted output
/// fidelity over the kept components. Branches that cannot occur at the
/// given inputs are omitted from `components`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeReport<T = f64> {
    pub scheme: String,
    #[serde(rename = "yield")]
    pub total_yield: T,
    pub average_fidelity: T,
    pub components: Vec<SchemeComponent<T>>,
}

fn finish_report<T: Scalar>(
    scheme: &str,
    components: Vec<SchemeComponent<T>>,
) -> Result<SchemeReport<T>> {
    let total = components
        .iter()
        .fold(T::zero(), |acc, c| acc + c.probability.clone());
    if total.is_zero() {
        return Err(Error::DegenerateBranch);
    }
    let weighted = components
        .iter()
        .fold(T::zero(), |acc, c| acc + c.probability.clone() * c.fidelity.clone());
    Ok(SchemeReport {
        scheme: scheme.into(),
        average_fidelity: weighted / total.clone(),
        total_yield: total,
        components,
    })
}

fn class_component_label(class: &ParityClass) -> String {
    let even = class.label();
    let odd: String = even.chars().map(|ch| if ch == 'e' { 'o' } else { 'e' }).collect();
    format!("{even}/{odd}")
}

fn identity_component<T: Scalar>(
    a: &GhzDiagonalEnsemble<T>,
    b: &GhzDiagonalEnsemble<T>,
) -> Result<Option<SchemeComponent<T>>> {
    match purify_identity(a, b) {
        Ok(id) => Ok(Some(SchemeComponent {
            label: "identity".into(),
            probability: id.branch_probability,
            fidelity: id.ensemble.fidelity().clone(),
        })),
        Err(Error::DegenerateBranch) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Evaluates the conventional scheme on symmetric three-photon inputs: the
/// identity branch is kept and every cross event is converted into a
/// two-photon extract, two of which fuse back into one three-photon system
/// (hence the factor 1/2 on the link component's share).
pub fn p1_report<T: Scalar>(f1: &T, f2: &T) -> Result<SchemeReport<T>> {
    let (a, b) = sym_pair(f1, f2)?;
    let mut components = Vec::new();
    if let Some(c) = identity_component(&a, &b)? {
        components.push(c);
    }
    // Probability-weighted mixture of the per-class extracts (identical for
    // symmetric inputs); its two copies share one party when fused.
    if let Some((cross_total, bell)) = extract_mixture(&a, &b)? {
        let linked = entanglement_link(&bell, &bell, 1, 1)?;
        components.push(SchemeComponent {
            label: "link".into(),
            probability: cross_total / T::from_ratio(2, 1),
            fidelity: linked.ensemble.fidelity().clone(),
        });
    }
    finish_report("P1", components)
}

/// Evaluates the recycling scheme: the identity branch is kept and every
/// cross class is re-purified against itself on its reference labels. A
/// class's share is `Y_c/2` times the pair-pair success probability
/// `Y_c^2 p_id` of its second round.
pub fn p1prime_report<T: Scalar>(f1: &T, f2: &T) -> Result<SchemeReport<T>> {
    let (a, b) = sym_pair(f1, f2)?;
    let mut components = Vec::new();
    if let Some(c) = identity_component(&a, &b)? {
        components.push(c);
    }
    for c in 1..pattern_count(3) {
        let class = ParityClass::from_index(3, c)?;
        match cross_residual(&a, &b, &class) {
            Ok(out) => {
                let again = second_round(&out.ensemble, &out.ensemble)?;
                let y_c = out.branch_probability;
                let pass = y_c.clone() * y_c.clone() * again.branch_probability;
                components.push(SchemeComponent {
                    label: class_component_label(&class),
                    probability: T::from_ratio(1, 2) * y_c * pass,
                    fidelity: again.ensemble.fidelity().clone(),
                });
            }
            Err(Error::DegenerateBranch) => {}
            Err(e) => return Err(e),
        }
    }
    finish_report("P1'", components)
}

/// Iterated fidelities of the two recycling routes at matched pair budgets
/// (`2^(rounds-1)` input pairs each): the cross residual re-purified through
/// `rounds` total recurrence rounds, against two-photon extracts re-purified
/// `rounds - 2` times and then fused. Pure inputs short-circuit to `(1, 1)`;
/// no cross events ever occur there.
pub fn multiround_tradeoff<T: Scalar>(f1: &T, f2: &T, rounds: u8) -> Result<(T, T)> {
    if !(2..=4).contains(&rounds) {
        return Err(Error::RoundRange { got: rounds, min: 2, max: 4 });
    }
    unit_range(f1)?;
    unit_range(f2)?;
    if *f1 == T::one() && *f2 == T::one() {
        return Ok((T::one(), T::one()));
    }
    let (a, b) = sym_pair(f1, f2)?;
    let class = ParityClass::from_index(3, 1)?;
    let mut residual = cross_residual(&a, &b, &class)?.ensemble;
    for _ in 1..rounds {
        residual = second_round(&residual, &residual)?.ensemble;
    }
    let mut bell = extract_best(&a, &b, &class)?.ensemble;
    for _ in 2..rounds {
        bell = purify_identity(&bell, &bell)?.ensemble;
    }
    let linked = entanglement_link(&bell, &bell, 1, 1)?;
    Ok((residual.fidelity().clone(), linked.ensemble.fidelity().clone()))
}

/// Which recycling route wins the two-round comparison.
pub fn preferred_scheme<T: Scalar>(f1: &T, f2: &T) -> Result<Scheme> {
    let (recycled, linked) = multiround_tradeoff(f1, f2, 2)?;
    Ok(if T::close(&recycled, &linked) {
        Scheme::Tie
    } else if recycled > linked {
        Scheme::P1Prime
    } else {
        Scheme::P1
    })
}

/// Inclusive uniform grid over one axis of the input-fidelity square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub steps: u32,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, steps: u32) -> Result<Self> {
        let in_unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if steps < 2 || !in_unit(min) || !in_unit(max) || min > max {
            return Err(Error::GridSpec);
        }
        Ok(GridSpec { min, max, steps })
    }

    /// The grid values; both endpoints are hit exactly.
    pub fn points(&self) -> Vec<f64> {
        let span = self.max - self.min;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + span * f64::from(i) / f64::from(self.steps - 1)
                }
            })
            .collect()
    }
}

/// Region predicates over the `(f1, f2)` square. Each token names one of
/// the region or choice plots the sweep reproduces; values are 0/1 for
/// boolean regions and 1/2/3 for the relabeling choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionPredicate {
    /// `eq7`: one identity round strictly beats the stronger input.
    IdentityGain,
    /// `fig3`: extract-and-fuse strictly beats the first input.
    LinkGain,
    /// `fig5-choice`: which residual relabeling carries the most weight.
    RelabelChoice,
    /// `fig7`: the re-purified residual strictly beats the first input.
    ResidualGain,
    /// `fig8`: residual re-purification beats extract-and-fuse.
    ResidualBeatsLink,
    /// `fig9`: the better recycling route strictly beats the first input.
    EitherRecoveryGain,
    /// `fig10`: recycling wins the trade-off after this many rounds.
    MultiroundGain(u8),
}

impl RegionPredicate {
    /// Parses a predicate token; `fig10` requires the rounds parameter and
    /// ignores it otherwise.
    pub fn parse(token: &str, rounds: Option<u8>) -> Result<Self> {
        match token {
            "eq7" => Ok(Self::IdentityGain),
            "fig3" => Ok(Self::LinkGain),
            "fig5-choice" => Ok(Self::RelabelChoice),
            "fig7" => Ok(Self::ResidualGain),
            "fig8" => Ok(Self::ResidualBeatsLink),
            "fig9" => Ok(Self::EitherRecoveryGain),
            "fig10" => {
                let r = rounds.ok_or(Error::MissingRounds)?;
                if !(2..=4).contains(&r) {
                    return Err(Error::RoundRange { got: r, min: 2, max: 4 });
                }
                Ok(Self::MultiroundGain(r))
            }
            other => Err(Error::UnknownPredicate(other.into())),
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            Self::IdentityGain => "eq7",
            Self::LinkGain => "fig3",
            Self::RelabelChoice => "fig5-choice",
            Self::ResidualGain => "fig7",
            Self::ResidualBeatsLink => "fig8",
            Self::EitherRecoveryGain => "fig9",
            Self::MultiroundGain(_) => "fig10",
        }
    }

    /// Value at one grid point.
    pub fn evaluate(&self, f1: f64, f2: f64) -> Result<f64> {
        let as_value = |b: bool| if b { 1.0 } else { 0.0 };
        match *self {
            Self::IdentityGain => {
                unit_range(&f1)?;
                unit_range(&f2)?;
                let a = GhzDiagonalEnsemble::symmetric(3, f1)?;
                let b = GhzDiagonalEnsemble::symmetric(3, f2)?;
                Ok(as_value(identity_improves(&a, &b)?))
            }
            Self::LinkGain => Ok(as_value(link_improves(&f1, &f2)?)),
            Self::RelabelChoice => Ok(f64::from(three_choices(3, &f1, &f2)?.0)),
            Self::ResidualGain => {
                unit_range(&f1)?;
                unit_range(&f2)?;
                Ok(as_value(closed_form::residual_round_improves(&f1, &f2)))
            }
            Self::ResidualBeatsLink => {
                let (recycled, linked) = multiround_tradeoff(&f1, &f2, 2)?;
                Ok(as_value(recycled > linked))
            }
            Self::EitherRecoveryGain => {
                let (recycled, linked) = multiround_tradeoff(&f1, &f2, 2)?;
                Ok(as_value(recycled.max(linked) > f1))
            }
            Self::MultiroundGain(rounds) => {
                let (recycled, linked) = multiround_tradeoff(&f1, &f2, rounds)?;
                Ok(as_value(recycled > linked))
            }
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub f1: f64,
    pub f2: f64,
    pub value: f64,
}

/// Evaluates a predicate over the grid, row-major with `f1` on the outer
/// axis. Points are independent (parallel under the `parallel` feature);
/// output order and values are deterministic either way.
pub fn region_sweep(
    f1_axis: &GridSpec,
    f2_axis: &GridSpec,
    predicate: RegionPredicate,
) -> Result<Vec<SweepPoint>> {
    let mut tasks = Vec::with_capacity(f1_axis.steps as usize * f2_axis.steps as usize);
    for x in f1_axis.points() {
        for y in f2_axis.points() {
            tasks.push((x, y));
        }
    }
    par_map(tasks, move |(f1, f2)| {
        predicate.evaluate(f1, f2).map(|value| SweepPoint { f1, f2, value })
    })
    .into_iter()
    .collect()
}

/// Renders sweep rows under the fixed `f1,f2,value` header.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("f1,f2,value\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.f1, p.f2, p.value));
    }
    out
}

/// Largest absolute disagreement between one closed-form branch and the
/// circuit oracle over a verification grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRow {
    pub n: u8,
    pub class: String,
    pub max_abs_deviation: f64,
}

struct PairDeviations {
    classes: Vec<f64>,
    extract: f64,
    link: f64,
    phase: f64,
}

fn ensemble_deviation(a: &GhzDiagonalEnsemble, b: &GhzDiagonalEnsemble) -> f64 {
    a.weights()
        .iter()
        .zip(b.weights())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

fn pair_deviations(n: u8, x: f64, y: f64) -> Result<PairDeviations> {
    let count = usize::from(pattern_count(n));
    let a = GhzDiagonalEnsemble::symmetric(n, x)?;
    let b = GhzDiagonalEnsemble::symmetric(n, y)?;

    let mut classes = vec![0.0; count];
    let closed = crate::bitflip::class_outcomes(&a, &b)?;
    let oracle = oracle_bitflip(&a, &b)?;
    let mut closed_by_index = vec![None; count];
    for (class, out) in &closed {
        closed_by_index[usize::from(class.index())] = Some(out);
    }
    let mut oracle_by_index = vec![None; count];
    for branch in &oracle {
        oracle_by_index[usize::from(branch.class.index())] = Some(branch);
    }
    for c in 0..count {
        classes[c] = match (closed_by_index[c], oracle_by_index[c]) {
            (Some(cf), Some(or)) => (cf.branch_probability - or.probability)
                .abs()
                .max(ensemble_deviation(&cf.ensemble, &or.ensemble)),
            (Some(cf), None) => cf.branch_probability,
            (None, Some(or)) => or.probability,
            (None, None) => 0.0,
        };
    }

    let mut extract = 0.0f64;
    if n >= 3 {
        for c in 1..count {
            let class = ParityClass::from_index(n, c as u16)?;
            for side in [class.even_photons(), class.odd_photons()] {
                if side.len() < 2 {
                    continue;
                }
                match extract_subsystem(&a, &b, &class, &side) {
                    Ok(ext) => {
                        let (prob, ens) = oracle_extract(&a, &b, &class, &side)?;
                        extract = extract
                            .max((ext.branch_probability - prob).abs())
                            .max(ensemble_deviation(&ext.ensemble, &ens));
                    }
                    Err(Error::DegenerateBranch) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }

    let mut link = 0.0f64;
    if n == 3 {
        let first = extract_subsystem(&a, &b, &ParityClass::from_index(3, 1)?, &[1, 2]);
        let second = extract_subsystem(&a, &b, &ParityClass::from_index(3, 2)?, &[1, 3]);
        if let (Ok(ab), Ok(ac)) = (first, second) {
            let (parties, fused) = link_extracts(&ab, &ac)?;
            debug_assert_eq!(parties, vec![1, 2, 3]);
            let oracle_fused = oracle_link(&ab.ensemble, &ac.ensemble, 0, 0)?;
            link = ensemble_deviation(&fused.ensemble, &oracle_fused)
                .max((fused.branch_probability - 1.0).abs());
        }
    }

    let mut phase = 0.0f64;
    if n <= 4 {
        let r1 = PhaseEnsemble::new(n, x)?;
        let r2 = PhaseEnsemble::new(n, y)?;
        let [or_id, or_cross] = oracle_phase(&r1, &r2)?;
        for (cf, (or_prob, or_ens)) in
            [(phase_identity(&r1, &r2), or_id), (phase_residual(&r1, &r2), or_cross)]
        {
            phase = match cf {
                Ok(out) => phase
                    .max((out.branch_probability - or_prob).abs())
                    .max((out.ensemble.p0() - or_ens.p0()).abs()),
                Err(Error::DegenerateBranch) => phase.max(or_prob),
                Err(e) => return Err(e),
            };
        }
    }

    Ok(PairDeviations { classes, extract, link, phase })
}

/// Compares every closed-form branch against the circuit oracle on a grid
/// of symmetric input pairs: the per-class round outcomes, subsystem
/// extraction (n >= 3), three-photon linking, and the phase round (n <= 4,
/// using the grid values as phase weights). One row per branch, `(n, class)`
/// ordered; the pseudo-classes `extract`, `link` and `phase` aggregate the
/// non-class comparisons.
pub fn oracle_deviation_rows(photon_counts: &[u8], grid: &GridSpec) -> Result<Vec<DeviationRow>> {
    let mut rows = Vec::new();
    for &n in photon_counts {
        if !(2..=MAX_ORACLE_PHOTONS).contains(&n) {
            return Err(Error::PhotonCount(n, MAX_ORACLE_PHOTONS));
        }
        let mut pairs = Vec::new();
        for x in grid.points() {
            for y in grid.points() {
                pairs.push((x, y));
            }
        }
        let per_pair: Result<Vec<PairDeviations>> =
            par_map(pairs, move |(x, y)| pair_deviations(n, x, y)).into_iter().collect();
        let per_pair = per_pair?;

        let count = usize::from(pattern_count(n));
        for c in 0..count {
            rows.push(DeviationRow {
                n,
                class: ParityClass::from_index(n, c as u16)?.label(),
                max_abs_deviation: per_pair.iter().fold(0.0, |acc, d| acc.max(d.classes[c])),
            });
        }
        if n >= 3 {
            rows.push(DeviationRow {
                n,
                class: "extract".into(),
                max_abs_deviation: per_pair.iter().fold(0.0, |acc, d| acc.max(d.extract)),
            });
        }
        if n == 3 {
            rows.push(DeviationRow {
                n,
                class: "link".into(),
                max_abs_deviation: per_pair.iter().fold(0.0, |acc, d| acc.max(d.link)),
            });
        }
        if n <= 4 {
            rows.push(DeviationRow {
                n,
                class: "phase".into(),
                max_abs_deviation: per_pair.iter().fold(0.0, |acc, d| acc.max(d.phase)),
            });
        }
    }
    Ok(rows)
}

/// Renders deviation rows under the fixed `n,class,max_abs_deviation`
/// header; deviations print in exponent form.
pub fn deviation_csv(rows: &[DeviationRow]) -> String {
    let mut out = String::from("n,class,max_abs_deviation\n");
    for row in rows {
        out.push_str(&format!("{},{},{:e}\n", row.n, row.class, row.max_abs_deviation));
    }
    out
}
