//! Deterministic plan search over the purification actions: which branches
//! to deliver, how deep to re-purify, and whether to recycle cross events by
//! re-purification or by extract-and-fuse, subject to a target fidelity and
//! a round budget.
//!
//! The model assumes an unbounded pool of input pairs feeding round 1 of
//! each declared track (bit-flip and/or phase-flip). Within a track, the
//! identity branch and the cross branches of round 1 are disjoint events, so
//! an identity chain runs alongside at most one cross recycling route; the
//! two recycling routes compete for the same cross events and are mutually
//! exclusive, as are raw delivery (no purification) and purifying a track.
//! Yields are bookkept per input pair: a chain halves its yield at every
//! round past its first, the residual route charges the pair-of-pairs class
//! probability on entry, and a node at round k costs `2^(k-2)` pairs (1 at
//! round 1), so a single R-round chain totals `2^(R-1)` pairs.
//!
//! The search is exhaustive over the delivery choices and deterministic:
//! every chain stage is computed once per (input fingerprint, round) and
//! shared across all candidate plans, stream lists are built in a fixed
//! order, and ties break toward higher secondary objective, then fewer
//! nodes, then the lexicographically smaller action sequence.

use crate::bitflip::{cross_residual, purify_identity, second_round};
use crate::ensemble::GhzDiagonalEnsemble;
use crate::link::{entanglement_link, extract_mixture};
use crate::metrics::unit_range;
use crate::pattern::{pattern_count, ParityClass};
use crate::phaseflip::{phase_identity, phase_residual, PhaseEnsemble};
use crate::scalar::Scalar;
use crate::{Error, Result};
use serde::Serialize;
use std::fmt;

pub use crate::metrics::multiround_tradeoff;

/// Upper bound on the round budget a plan search will explore.
pub const MAX_PLAN_ROUNDS: u8 = 6;

/// The ensembles a plan may draw on. Each track is optional; at least one
/// must be present.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerInputs<T: Scalar = f64> {
    pub bit_pair: Option<(GhzDiagonalEnsemble<T>, GhzDiagonalEnsemble<T>)>,
    pub phase_pair: Option<(PhaseEnsemble<T>, PhaseEnsemble<T>)>,
}

impl<T: Scalar> PlannerInputs<T> {
    pub fn bit(first: GhzDiagonalEnsemble<T>, second: GhzDiagonalEnsemble<T>) -> Self {
        PlannerInputs { bit_pair: Some((first, second)), phase_pair: None }
    }

    pub fn phase(first: PhaseEnsemble<T>, second: PhaseEnsemble<T>) -> Self {
        PlannerInputs { bit_pair: None, phase_pair: Some((first, second)) }
    }

    pub fn with_phase(mut self, first: PhaseEnsemble<T>, second: PhaseEnsemble<T>) -> Self {
        self.phase_pair = Some((first, second));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.bit_pair.is_none() && self.phase_pair.is_none()
    }
}

/// Lexicographic search objective: the first key is maximized, ties fall
/// through to the other key, then to plan size and action order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Maximize total yield, then the delivered (worst-stream) fidelity.
    #[default]
    YieldFirst,
    /// Maximize the delivered fidelity, then total yield.
    FidelityFirst,
}

/// Search parameters. `target_fidelity` is the qualification bar every
/// delivered stream must meet (within scalar tolerance); `require_recycle`
/// demands at least one recycling stream (link or a residual round).
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig<T: Scalar = f64> {
    pub target_fidelity: T,
    pub max_rounds: u8,
    pub objective: Objective,
    pub require_recycle: bool,
}

impl<T: Scalar> SearchConfig<T> {
    pub fn new(target_fidelity: T, max_rounds: u8) -> Result<Self> {
        if !(1..=MAX_PLAN_ROUNDS).contains(&max_rounds) {
            return Err(Error::RoundRange { got: max_rounds, min: 1, max: MAX_PLAN_ROUNDS });
        }
        unit_range(&target_fidelity)?;
        Ok(SearchConfig {
            target_fidelity,
            max_rounds,
            objective: Objective::default(),
            require_recycle: false,
        })
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn require_recycling(mut self) -> Self {
        self.require_recycle = true;
        self
    }

    fn met(&self, fidelity: &T) -> bool {
        fidelity.clone() + T::tol() >= self.target_fidelity
    }
}

/// One operation of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanAction {
    /// Keep the identity branch of a bit-flip round.
    Identity,
    /// Fuse two cross-class extracts back into a larger system.
    Link,
    /// Keep the identity branch of a phase-flip round.
    PhaseIdentity,
    /// Re-purify two copies of a phase residual.
    PhaseResidualRound,
    /// Re-purify two copies of a bit-flip cross residual.
    ResidualSecondRound,
}

impl fmt::Display for PlanAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanAction::Identity => "identity",
            PlanAction::Link => "link",
            PlanAction::PhaseIdentity => "phase_identity",
            PlanAction::PhaseResidualRound => "phase_residual_round",
            PlanAction::ResidualSecondRound => "residual_second_round",
        })
    }
}

/// Which error track a stream draws on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    Bit,
    Phase,
}

/// How a stream delivers systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamKind {
    /// The first input passed through unpurified.
    RawFirst,
    /// The second input passed through unpurified.
    RawSecond,
    /// Identity branches purified to the stream's depth.
    Identity,
    /// Cross-class extracts fused pairwise.
    Link,
    /// One cross class re-purified against itself to the stream's depth.
    Residual,
}

/// One node of a plan: the action, the round it runs at, its cost in input
/// pairs, a fingerprint of the state pair it consumes, and the branch it
/// keeps. For a round-1 node the probability and fidelity describe the
/// identity branch and read zero when that branch cannot occur; for a
/// residual entry node the probability is the pair-of-pairs class success
/// `Y_c^2 p`, matching the yield bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanNode<T = f64> {
    pub action: PlanAction,
    pub lineage: String,
    pub round: u8,
    pub cost_pairs: u32,
    pub input_fingerprint: String,
    pub probability: T,
    pub fidelity: T,
}

/// One delivered output stream of a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanStream<T = f64> {
    pub id: String,
    pub track: Track,
    pub kind: StreamKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_index: Option<u16>,
    /// Rounds of purification behind the stream; 0 for raw delivery.
    pub depth: u8,
    #[serde(rename = "yield")]
    pub stream_yield: T,
    pub fidelity: T,
}

/// A complete plan: delivered streams, the ordered node list behind them
/// (lineage-major, round-ascending, shared round-1 nodes listed once), the
/// worst delivered fidelity, the summed yield per input pair, and the summed
/// node cost in pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan<T = f64> {
    pub streams: Vec<PlanStream<T>>,
    pub nodes: Vec<PlanNode<T>>,
    pub final_fidelity: T,
    pub total_yield: T,
    pub total_cost_pairs: u32,
}

impl<T: Scalar> Plan<T> {
    pub fn actions(&self) -> Vec<PlanAction> {
        self.nodes.iter().map(|n| n.action).collect()
    }
}

/// Search result: either the best plan or an explicit infeasibility report
/// carrying the best fidelity any candidate stream could deliver within the
/// round budget (restricted to recycling streams when those were required;
/// `None` when no candidate exists at all).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanOutcome<T = f64> {
    Feasible(Plan<T>),
    Infeasible { best_fidelity: Option<T> },
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn ghz_pair_fingerprint<T: Scalar>(
    a: &GhzDiagonalEnsemble<T>,
    b: &GhzDiagonalEnsemble<T>,
) -> String {
    let mut bytes = vec![a.n()];
    for w in a.weights() {
        bytes.extend_from_slice(&w.to_f64().to_le_bytes());
    }
    bytes.push(0xff);
    bytes.push(b.n());
    for w in b.weights() {
        bytes.extend_from_slice(&w.to_f64().to_le_bytes());
    }
    format!("{:016x}", fnv1a(&bytes))
}

fn phase_pair_fingerprint<T: Scalar>(a: &PhaseEnsemble<T>, b: &PhaseEnsemble<T>) -> String {
    let mut bytes = vec![a.n()];
    bytes.extend_from_slice(&a.p0().to_f64().to_le_bytes());
    bytes.push(0xff);
    bytes.push(b.n());
    bytes.extend_from_slice(&b.p0().to_f64().to_le_bytes());
    format!("{:016x}", fnv1a(&bytes))
}

fn node_cost(round: u8) -> u32 {
    if round <= 1 {
        1
    } else {
        1u32 << u32::from(round - 2)
    }
}

struct StreamCandidate<T: Scalar> {
    stream: PlanStream<T>,
    /// Nodes owned by this stream's lineage; the shared round-1 node is held
    /// by the track, not by any stream.
    nodes: Vec<PlanNode<T>>,
    recycling: bool,
}

struct TrackCandidates<T: Scalar> {
    round1: PlanNode<T>,
    raw: Vec<StreamCandidate<T>>,
    identity: Vec<StreamCandidate<T>>,
    link: Option<StreamCandidate<T>>,
    /// Qualifying per-class residual streams, grouped by depth (index 0 is
    /// depth 2), each group sorted by fidelity descending.
    residual_by_depth: Vec<Vec<StreamCandidate<T>>>,
    best_any: Option<T>,
    best_recycling: Option<T>,
}

fn raise<T: Scalar>(best: &mut Option<T>, fidelity: &T) {
    if best.as_ref().is_none_or(|cur| fidelity > cur) {
        *best = Some(fidelity.clone());
    }
}

fn sort_by_fidelity<T: Scalar>(streams: &mut [StreamCandidate<T>]) {
    streams.sort_by(|x, y| {
        y.stream
            .fidelity
            .partial_cmp(&x.stream.fidelity)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

fn bit_track<T: Scalar>(
    a: &GhzDiagonalEnsemble<T>,
    b: &GhzDiagonalEnsemble<T>,
    config: &SearchConfig<T>,
) -> Result<TrackCandidates<T>> {
    let mut best_any = None;
    let mut best_recycling = None;

    let mut raw = Vec::new();
    for (kind, id, ens) in
        [(StreamKind::RawFirst, "bit:raw:1", a), (StreamKind::RawSecond, "bit:raw:2", b)]
    {
        let fidelity = ens.fidelity().clone();
        raise(&mut best_any, &fidelity);
        if config.met(&fidelity) {
            raw.push(StreamCandidate {
                stream: PlanStream {
                    id: id.into(),
                    track: Track::Bit,
                    kind,
                    class: None,
                    class_index: None,
                    depth: 0,
                    stream_yield: T::one(),
                    fidelity,
                },
                nodes: Vec::new(),
                recycling: false,
            });
        }
    }
    sort_by_fidelity(&mut raw);

    let (round1_probability, first_identity) = match purify_identity(a, b) {
        Ok(out) => (out.branch_probability, Some(out.ensemble)),
        Err(Error::DegenerateBranch) => (T::zero(), None),
        Err(e) => return Err(e),
    };
    let round1 = PlanNode {
        action: PlanAction::Identity,
        lineage: "bit".into(),
        round: 1,
        cost_pairs: node_cost(1),
        input_fingerprint: ghz_pair_fingerprint(a, b),
        probability: round1_probability.clone(),
        fidelity: first_identity.as_ref().map_or_else(T::zero, |e| e.fidelity().clone()),
    };

    let mut identity = Vec::new();
    if let Some(first) = first_identity {
        let mut ens = first;
        let mut stream_yield = round1_probability;
        let mut nodes: Vec<PlanNode<T>> = Vec::new();
        for depth in 1..=config.max_rounds {
            if depth > 1 {
                let fingerprint = ghz_pair_fingerprint(&ens, &ens);
                let out = purify_identity(&ens, &ens)?;
                stream_yield =
                    T::from_ratio(1, 2) * stream_yield * out.branch_probability.clone();
                nodes.push(PlanNode {
                    action: PlanAction::Identity,
                    lineage: "bit:identity".into(),
                    round: depth,
                    cost_pairs: node_cost(depth),
                    input_fingerprint: fingerprint,
                    probability: out.branch_probability.clone(),
                    fidelity: out.ensemble.fidelity().clone(),
                });
                ens = out.ensemble;
            }
            let fidelity = ens.fidelity().clone();
            raise(&mut best_any, &fidelity);
            if config.met(&fidelity) && stream_yield > T::zero() {
                identity.push(StreamCandidate {
                    stream: PlanStream {
                        id: "bit:identity".into(),
                        track: Track::Bit,
                        kind: StreamKind::Identity,
                        class: None,
                        class_index: None,
                        depth,
                        stream_yield: stream_yield.clone(),
                        fidelity,
                    },
                    nodes: nodes.clone(),
                    recycling: false,
                });
            }
        }
    }

    let mut link = None;
    if a.n() == 3 && config.max_rounds >= 2 {
        if let Some((cross_probability, bell)) = extract_mixture(a, b)? {
            let fused = entanglement_link(&bell, &bell, 1, 1)?;
            let fidelity = fused.ensemble.fidelity().clone();
            raise(&mut best_any, &fidelity);
            raise(&mut best_recycling, &fidelity);
            let stream_yield = T::from_ratio(1, 2) * cross_probability;
            if config.met(&fidelity) && stream_yield > T::zero() {
                link = Some(StreamCandidate {
                    stream: PlanStream {
                        id: "bit:link".into(),
                        track: Track::Bit,
                        kind: StreamKind::Link,
                        class: None,
                        class_index: None,
                        depth: 2,
                        stream_yield,
                        fidelity: fidelity.clone(),
                    },
                    nodes: vec![PlanNode {
                        action: PlanAction::Link,
                        lineage: "bit:link".into(),
                        round: 2,
                        cost_pairs: node_cost(2),
                        input_fingerprint: ghz_pair_fingerprint(&bell, &bell),
                        probability: T::one(),
                        fidelity,
                    }],
                    recycling: true,
                });
            }
        }
    }

    let depth_slots = usize::from(config.max_rounds.saturating_sub(1));
    let mut residual_by_depth: Vec<Vec<StreamCandidate<T>>> = Vec::new();
    residual_by_depth.resize_with(depth_slots, Vec::new);
    for c in 1..pattern_count(a.n()) {
        let class = ParityClass::from_index(a.n(), c)?;
        let outcome = match cross_residual(a, b, &class) {
            Ok(out) => out,
            Err(Error::DegenerateBranch) => continue,
            Err(e) => return Err(e),
        };
        let class_probability = outcome.branch_probability;
        let lineage = format!("bit:residual:{}", class.label());
        let mut ens = outcome.ensemble;
        let mut stream_yield = T::zero();
        let mut nodes: Vec<PlanNode<T>> = Vec::new();
        for depth in 2..=config.max_rounds {
            let fingerprint = ghz_pair_fingerprint(&ens, &ens);
            let again = second_round(&ens, &ens)?;
            let pass = again.branch_probability.clone();
            let node_probability = if depth == 2 {
                // Entry charges the pair-of-pairs class probability.
                let entry = class_probability.clone() * class_probability.clone() * pass;
                stream_yield =
                    T::from_ratio(1, 2) * class_probability.clone() * entry.clone();
                entry
            } else {
                stream_yield = T::from_ratio(1, 2) * stream_yield * pass.clone();
                pass
            };
            nodes.push(PlanNode {
                action: PlanAction::ResidualSecondRound,
                lineage: lineage.clone(),
                round: depth,
                cost_pairs: node_cost(depth),
                input_fingerprint: fingerprint,
                probability: node_probability,
                fidelity: again.ensemble.fidelity().clone(),
            });
            ens = again.ensemble;
            let fidelity = ens.fidelity().clone();
            raise(&mut best_any, &fidelity);
            raise(&mut best_recycling, &fidelity);
            if config.met(&fidelity) && stream_yield > T::zero() {
                residual_by_depth[usize::from(depth - 2)].push(StreamCandidate {
                    stream: PlanStream {
                        id: lineage.clone(),
                        track: Track::Bit,
                        kind: StreamKind::Residual,
                        class: Some(class.label()),
                        class_index: Some(c),
                        depth,
                        stream_yield: stream_yield.clone(),
                        fidelity,
                    },
                    nodes: nodes.clone(),
                    recycling: true,
                });
            }
        }
    }
    for group in &mut residual_by_depth {
        sort_by_fidelity(group);
    }

    Ok(TrackCandidates {
        round1,
        raw,
        identity,
        link,
        residual_by_depth,
        best_any,
        best_recycling,
    })
}

fn phase_track<T: Scalar>(
    a: &PhaseEnsemble<T>,
    b: &PhaseEnsemble<T>,
    config: &SearchConfig<T>,
) -> Result<TrackCandidates<T>> {
    let mut best_any = None;
    let mut best_recycling = None;

    let mut raw = Vec::new();
    for (kind, id, ens) in
        [(StreamKind::RawFirst, "phase:raw:1", a), (StreamKind::RawSecond, "phase:raw:2", b)]
    {
        let fidelity = ens.p0().clone();
        raise(&mut best_any, &fidelity);
        if config.met(&fidelity) {
            raw.push(StreamCandidate {
                stream: PlanStream {
                    id: id.into(),
                    track: Track::Phase,
                    kind,
                    class: None,
                    class_index: None,
                    depth: 0,
                    stream_yield: T::one(),
                    fidelity,
                },
                nodes: Vec::new(),
                recycling: false,
            });
        }
    }
    sort_by_fidelity(&mut raw);

    let (round1_probability, first_identity) = match phase_identity(a, b) {
        Ok(out) => (out.branch_probability, Some(out.ensemble)),
        Err(Error::DegenerateBranch) => (T::zero(), None),
        Err(e) => return Err(e),
    };
    let round1 = PlanNode {
        action: PlanAction::PhaseIdentity,
        lineage: "phase".into(),
        round: 1,
        cost_pairs: node_cost(1),
        input_fingerprint: phase_pair_fingerprint(a, b),
        probability: round1_probability.clone(),
        fidelity: first_identity.as_ref().map_or_else(T::zero, |e| e.p0().clone()),
    };

    let mut identity = Vec::new();
    if let Some(first) = first_identity {
        let mut ens = first;
        let mut stream_yield = round1_probability;
        let mut nodes: Vec<PlanNode<T>> = Vec::new();
        for depth in 1..=config.max_rounds {
            if depth > 1 {
                let fingerprint = phase_pair_fingerprint(&ens, &ens);
                let out = phase_identity(&ens, &ens)?;
                stream_yield =
                    T::from_ratio(1, 2) * stream_yield * out.branch_probability.clone();
                nodes.push(PlanNode {
                    action: PlanAction::PhaseIdentity,
                    lineage: "phase:identity".into(),
                    round: depth,
                    cost_pairs: node_cost(depth),
                    input_fingerprint: fingerprint,
                    probability: out.branch_probability.clone(),
                    fidelity: out.ensemble.p0().clone(),
                });
                ens = out.ensemble;
            }
            let fidelity = ens.p0().clone();
            raise(&mut best_any, &fidelity);
            if config.met(&fidelity) && stream_yield > T::zero() {
                identity.push(StreamCandidate {
                    stream: PlanStream {
                        id: "phase:identity".into(),
                        track: Track::Phase,
                        kind: StreamKind::Identity,
                        class: None,
                        class_index: None,
                        depth,
                        stream_yield: stream_yield.clone(),
                        fidelity,
                    },
                    nodes: nodes.clone(),
                    recycling: false,
                });
            }
        }
    }

    let depth_slots = usize::from(config.max_rounds.saturating_sub(1));
    let mut residual_by_depth: Vec<Vec<StreamCandidate<T>>> = Vec::new();
    residual_by_depth.resize_with(depth_slots, Vec::new);
    match phase_residual(a, b) {
        Ok(outcome) => {
            let cross_probability = outcome.branch_probability;
            let mut ens = outcome.ensemble;
            let mut stream_yield = T::zero();
            let mut nodes: Vec<PlanNode<T>> = Vec::new();
            for depth in 2..=config.max_rounds {
                let fingerprint = phase_pair_fingerprint(&ens, &ens);
                let again = phase_identity(&ens, &ens)?;
                let pass = again.branch_probability.clone();
                let node_probability = if depth == 2 {
                    let entry = cross_probability.clone() * cross_probability.clone() * pass;
                    stream_yield =
                        T::from_ratio(1, 2) * cross_probability.clone() * entry.clone();
                    entry
                } else {
                    stream_yield = T::from_ratio(1, 2) * stream_yield * pass.clone();
                    pass
                };
                nodes.push(PlanNode {
                    action: PlanAction::PhaseResidualRound,
                    lineage: "phase:residual".into(),
                    round: depth,
                    cost_pairs: node_cost(depth),
                    input_fingerprint: fingerprint,
                    probability: node_probability,
                    fidelity: again.ensemble.p0().clone(),
                });
                ens = again.ensemble;
                let fidelity = ens.p0().clone();
                raise(&mut best_any, &fidelity);
                raise(&mut best_recycling, &fidelity);
                if config.met(&fidelity) && stream_yield > T::zero() {
                    residual_by_depth[usize::from(depth - 2)].push(StreamCandidate {
                        stream: PlanStream {
                            id: "phase:residual".into(),
                            track: Track::Phase,
                            kind: StreamKind::Residual,
                            class: None,
                            class_index: None,
                            depth,
                            stream_yield: stream_yield.clone(),
                            fidelity,
                        },
                        nodes: nodes.clone(),
                        recycling: true,
                    });
                }
            }
        }
        Err(Error::DegenerateBranch) => {}
        Err(e) => return Err(e),
    }

    Ok(TrackCandidates {
        round1,
        raw,
        identity,
        link: None,
        residual_by_depth,
        best_any,
        best_recycling,
    })
}

/// Selected streams of one track plus whether they run the purify round.
type TrackChoice<'a, T> = (Vec<&'a StreamCandidate<T>>, bool);

fn track_choices<T: Scalar>(track: &TrackCandidates<T>) -> Vec<TrackChoice<'_, T>> {
    let mut choices: Vec<TrackChoice<'_, T>> = vec![(Vec::new(), false)];
    // Raw delivery: fidelity-descending prefixes (anything below the lowest
    // included fidelity is already excluded by qualification).
    for take in 1..=track.raw.len() {
        choices.push((track.raw[..take].iter().collect(), false));
    }
    // Purify combinations: at most one identity delivery depth, and one of
    // the mutually exclusive cross routes (fidelity-descending prefixes of
    // the per-class residual streams at one common depth).
    let mut cross_options: Vec<Vec<&StreamCandidate<T>>> = vec![Vec::new()];
    if let Some(link) = &track.link {
        cross_options.push(vec![link]);
    }
    for group in &track.residual_by_depth {
        for take in 1..=group.len() {
            cross_options.push(group[..take].iter().collect());
        }
    }
    for identity in
        std::iter::once(None).chain(track.identity.iter().map(Some))
    {
        for cross in &cross_options {
            if identity.is_none() && cross.is_empty() {
                continue;
            }
            let mut streams = Vec::new();
            if let Some(id) = identity {
                streams.push(id);
            }
            streams.extend(cross.iter().copied());
            choices.push((streams, true));
        }
    }
    choices
}

fn assemble<T: Scalar>(
    bit: Option<(&TrackCandidates<T>, &TrackChoice<'_, T>)>,
    phase: Option<(&TrackCandidates<T>, &TrackChoice<'_, T>)>,
) -> Plan<T> {
    let mut streams = Vec::new();
    let mut nodes = Vec::new();
    for item in [bit, phase].into_iter().flatten() {
        let (track, (selected, purify)) = item;
        if *purify {
            nodes.push(track.round1.clone());
        }
        for candidate in selected {
            streams.push(candidate.stream.clone());
            nodes.extend(candidate.nodes.iter().cloned());
        }
    }
    let mut final_fidelity = streams[0].fidelity.clone();
    let mut total_yield = T::zero();
    for s in &streams {
        if s.fidelity < final_fidelity {
            final_fidelity = s.fidelity.clone();
        }
        total_yield = total_yield + s.stream_yield.clone();
    }
    let total_cost_pairs = nodes.iter().map(|n| n.cost_pairs).sum();
    Plan { streams, nodes, final_fidelity, total_yield, total_cost_pairs }
}

fn prefer<T: Scalar>(candidate: &Plan<T>, incumbent: &Plan<T>, objective: Objective) -> bool {
    let (first, second) = match objective {
        Objective::YieldFirst => (
            (&candidate.total_yield, &incumbent.total_yield),
            (&candidate.final_fidelity, &incumbent.final_fidelity),
        ),
        Objective::FidelityFirst => (
            (&candidate.final_fidelity, &incumbent.final_fidelity),
            (&candidate.total_yield, &incumbent.total_yield),
        ),
    };
    if !T::close(first.0, first.1) {
        return first.0 > first.1;
    }
    if !T::close(second.0, second.1) {
        return second.0 > second.1;
    }
    if candidate.nodes.len() != incumbent.nodes.len() {
        return candidate.nodes.len() < incumbent.nodes.len();
    }
    candidate.actions() < incumbent.actions()
}

/// Exhaustive deterministic search for the best delivery plan under the
/// config's target, round budget and objective. Infeasibility is explicit
/// and reports the best fidelity any candidate stream could deliver.
pub fn search_plan<T: Scalar>(
    inputs: &PlannerInputs<T>,
    config: &SearchConfig<T>,
) -> Result<PlanOutcome<T>> {
    if inputs.is_empty() {
        return Err(Error::NoPlannerInputs);
    }
    if !(1..=MAX_PLAN_ROUNDS).contains(&config.max_rounds) {
        return Err(Error::RoundRange { got: config.max_rounds, min: 1, max: MAX_PLAN_ROUNDS });
    }
    unit_range(&config.target_fidelity)?;

    let bit = match &inputs.bit_pair {
        Some((a, b)) => Some(bit_track(a, b, config)?),
        None => None,
    };
    let phase = match &inputs.phase_pair {
        Some((a, b)) => Some(phase_track(a, b, config)?),
        None => None,
    };

    let empty_choice: Vec<TrackChoice<'_, T>> = vec![(Vec::new(), false)];
    let bit_choices = bit.as_ref().map_or(empty_choice.clone(), |t| track_choices(t));
    let phase_choices = phase.as_ref().map_or(empty_choice, |t| track_choices(t));

    let mut best: Option<Plan<T>> = None;
    for bit_choice in &bit_choices {
        for phase_choice in &phase_choices {
            if bit_choice.0.is_empty() && phase_choice.0.is_empty() {
                continue;
            }
            if config.require_recycle
                && !bit_choice.0.iter().chain(&phase_choice.0).any(|s| s.recycling)
            {
                continue;
            }
            let plan = assemble(
                bit.as_ref().map(|t| (t, bit_choice)),
                phase.as_ref().map(|t| (t, phase_choice)),
            );
            if best.as_ref().is_none_or(|inc| prefer(&plan, inc, config.objective)) {
                best = Some(plan);
            }
        }
    }

    Ok(match best {
        Some(plan) => PlanOutcome::Feasible(plan),
        None => {
            let pick = |t: &TrackCandidates<T>| {
                if config.require_recycle {
                    t.best_recycling.clone()
                } else {
                    t.best_any.clone()
                }
            };
            let mut best_fidelity: Option<T> = None;
            for track in [&bit, &phase].into_iter().flatten() {
                if let Some(f) = pick(track) {
                    raise(&mut best_fidelity, &f);
                }
            }
            PlanOutcome::Infeasible { best_fidelity }
        }
    })
}

fn replay_stream<T: Scalar>(
    inputs: &PlannerInputs<T>,
    stream: &PlanStream<T>,
) -> Result<(T, T)> {
    let mismatch =
        |id: &str| Error::Parse(format!("plan stream {id} does not match the declared inputs"));
    match stream.track {
        Track::Bit => {
            let (a, b) = inputs.bit_pair.as_ref().ok_or_else(|| mismatch(&stream.id))?;
            match stream.kind {
                StreamKind::RawFirst => Ok((T::one(), a.fidelity().clone())),
                StreamKind::RawSecond => Ok((T::one(), b.fidelity().clone())),
                StreamKind::Identity => {
                    let out = purify_identity(a, b)?;
                    let mut stream_yield = out.branch_probability;
                    let mut ens = out.ensemble;
                    for _ in 1..stream.depth {
                        let out = purify_identity(&ens, &ens)?;
                        stream_yield =
                            T::from_ratio(1, 2) * stream_yield * out.branch_probability.clone();
                        ens = out.ensemble;
                    }
                    Ok((stream_yield, ens.fidelity().clone()))
                }
                StreamKind::Link => {
                    let (cross_probability, bell) =
                        extract_mixture(a, b)?.ok_or_else(|| mismatch(&stream.id))?;
                    let fused = entanglement_link(&bell, &bell, 1, 1)?;
                    Ok((
                        T::from_ratio(1, 2) * cross_probability,
                        fused.ensemble.fidelity().clone(),
                    ))
                }
                StreamKind::Residual => {
                    let index = stream.class_index.ok_or_else(|| mismatch(&stream.id))?;
                    let class = ParityClass::from_index(a.n(), index)?;
                    let out = cross_residual(a, b, &class)?;
                    let class_probability = out.branch_probability;
                    let mut ens = out.ensemble;
                    let mut stream_yield = T::zero();
                    for depth in 2..=stream.depth {
                        let again = second_round(&ens, &ens)?;
                        let pass = again.branch_probability.clone();
                        if depth == 2 {
                            stream_yield = T::from_ratio(1, 2)
                                * class_probability.clone()
                                * class_probability.clone()
                                * class_probability.clone()
                                * pass;
                        } else {
                            stream_yield = T::from_ratio(1, 2) * stream_yield * pass;
                        }
                        ens = again.ensemble;
                    }
                    Ok((stream_yield, ens.fidelity().clone()))
                }
            }
        }
        Track::Phase => {
            let (a, b) = inputs.phase_pair.as_ref().ok_or_else(|| mismatch(&stream.id))?;
            match stream.kind {
                StreamKind::RawFirst => Ok((T::one(), a.p0().clone())),
                StreamKind::RawSecond => Ok((T::one(), b.p0().clone())),
                StreamKind::Identity => {
                    let out = phase_identity(a, b)?;
                    let mut stream_yield = out.branch_probability;
                    let mut ens = out.ensemble;
                    for _ in 1..stream.depth {
                        let out = phase_identity(&ens, &ens)?;
                        stream_yield =
                            T::from_ratio(1, 2) * stream_yield * out.branch_probability.clone();
                        ens = out.ensemble;
                    }
                    Ok((stream_yield, ens.p0().clone()))
                }
                StreamKind::Link => Err(mismatch(&stream.id)),
                StreamKind::Residual => {
                    let out = phase_residual(a, b)?;
                    let cross_probability = out.branch_probability;
                    let mut ens = out.ensemble;
                    let mut stream_yield = T::zero();
                    for depth in 2..=stream.depth {
                        let again = phase_identity(&ens, &ens)?;
                        let pass = again.branch_probability.clone();
                        if depth == 2 {
                            stream_yield = T::from_ratio(1, 2)
                                * cross_probability.clone()
                                * cross_probability.clone()
                                * cross_probability.clone()
                                * pass;
                        } else {
                            stream_yield = T::from_ratio(1, 2) * stream_yield * pass;
                        }
                        ens = again.ensemble;
                    }
                    Ok((stream_yield, ens.p0().clone()))
                }
            }
        }
    }
}

/// Audits a plan by recomputing every stream from the inputs it claims to
/// consume; returns the recomputed `(final_fidelity, total_yield)`.
pub fn replay_plan<T: Scalar>(inputs: &PlannerInputs<T>, plan: &Plan<T>) -> Result<(T, T)> {
    let mut final_fidelity: Option<T> = None;
    let mut total_yield = T::zero();
    for stream in &plan.streams {
        let (stream_yield, fidelity) = replay_stream(inputs, stream)?;
        total_yield = total_yield + stream_yield;
        final_fidelity = Some(match final_fidelity {
            None => fidelity,
            Some(cur) => {
                if fidelity < cur {
                    fidelity
                } else {
                    cur
                }
            }
        });
    }
    let final_fidelity =
        final_fidelity.ok_or_else(|| Error::Parse("plan delivers no streams".into()))?;
    Ok((final_fidelity, total_yield))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit_inputs(f1: f64, f2: f64) -> PlannerInputs {
        PlannerInputs::bit(
            GhzDiagonalEnsemble::symmetric(3, f1).unwrap(),
            GhzDiagonalEnsemble::symmetric(3, f2).unwrap(),
        )
    }

    fn feasible(outcome: PlanOutcome) -> Plan {
        match outcome {
            PlanOutcome::Feasible(plan) => plan,
            PlanOutcome::Infeasible { best_fidelity } => {
                panic!("expected a feasible plan, best reachable {best_fidelity:?}")
            }
        }
    }

    #[test]
    fn residual_recycling_meets_midband_target() {
        let inputs = bit_inputs(0.8, 0.6);
        let config = SearchConfig::new(0.86, 2).unwrap();
        let plan = feasible(search_plan(&inputs, &config).unwrap());
        assert!(plan.actions().contains(&PlanAction::ResidualSecondRound));
        assert!(!plan.actions().contains(&PlanAction::Link));
        assert!((plan.final_fidelity - 576.0 / 665.0).abs() < 1e-12);
        let expected_yield = 1.52 / 3.0 + 1.5 * (1.48 / 9.0) * (1.064 / 81.0);
        assert!((plan.total_yield - expected_yield).abs() < 1e-12);
        // Shared round 1, then one second-round node per class.
        assert_eq!(plan.nodes.len(), 4);
        assert_eq!(plan.total_cost_pairs, 4);
        assert_eq!(plan.streams.len(), 4);
        assert_eq!(plan.streams[0].kind, StreamKind::Identity);
        assert!(plan.streams[1..].iter().all(|s| s.kind == StreamKind::Residual));
    }

    #[test]
    fn raw_passthrough_wins_when_target_already_met() {
        let inputs = bit_inputs(0.8, 0.6);
        let plan =
            feasible(search_plan(&inputs, &SearchConfig::new(0.8, 2).unwrap()).unwrap());
        assert!(plan.nodes.is_empty());
        assert_eq!(plan.total_cost_pairs, 0);
        assert_eq!(plan.streams.len(), 1);
        assert_eq!(plan.streams[0].kind, StreamKind::RawFirst);
        assert!((plan.total_yield - 1.0).abs() < 1e-15);
        assert!((plan.final_fidelity - 0.8).abs() < 1e-15);

        // A lower bar lets both inputs pass through.
        let plan =
            feasible(search_plan(&inputs, &SearchConfig::new(0.5, 2).unwrap()).unwrap());
        assert!(plan.nodes.is_empty());
        assert!((plan.total_yield - 2.0).abs() < 1e-15);
        assert!((plan.final_fidelity - 0.6).abs() < 1e-15);
    }

    #[test]
    fn fidelity_first_prefers_the_deepest_identity_chain() {
        let inputs = bit_inputs(0.8, 0.6);
        let config = SearchConfig::new(0.5, 2)
            .unwrap()
            .with_objective(Objective::FidelityFirst);
        let plan = feasible(search_plan(&inputs, &config).unwrap());
        assert_eq!(plan.actions(), vec![PlanAction::Identity, PlanAction::Identity]);
        assert!((plan.final_fidelity - 0.99897225).abs() < 1e-6);

        let config = SearchConfig::new(0.5, 3)
            .unwrap()
            .with_objective(Objective::FidelityFirst);
        let plan = feasible(search_plan(&inputs, &config).unwrap());
        assert_eq!(plan.nodes.iter().map(|n| n.round).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(plan.nodes.iter().map(|n| n.cost_pairs).collect::<Vec<_>>(), vec![1, 1, 2]);
        assert_eq!(plan.total_cost_pairs, 4);
        assert!(plan.final_fidelity > 0.9999);
    }

    #[test]
    fn equal_inputs_recycle_through_linking() {
        let inputs = bit_inputs(0.7, 0.7);
        for objective in [Objective::YieldFirst, Objective::FidelityFirst] {
            let config = SearchConfig::new(0.45, 2)
                .unwrap()
                .with_objective(objective)
                .require_recycling();
            let plan = feasible(search_plan(&inputs, &config).unwrap());
            assert!(plan.actions().contains(&PlanAction::Link), "{objective:?}");
            assert!(
                !plan.actions().contains(&PlanAction::ResidualSecondRound),
                "{objective:?}"
            );
        }
    }

    #[test]
    fn infeasible_reports_best_reachable_fidelity() {
        let inputs = bit_inputs(0.8, 0.6);
        let outcome = search_plan(&inputs, &SearchConfig::new(0.999, 2).unwrap()).unwrap();
        match outcome {
            PlanOutcome::Infeasible { best_fidelity: Some(best) } => {
                assert!((best - 0.99897225).abs() < 1e-6);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        // One more round of headroom makes it feasible.
        feasible(search_plan(&inputs, &SearchConfig::new(0.999, 3).unwrap()).unwrap());

        // Pure inputs never produce cross events, so a recycling requirement
        // cannot be met and there is no recycling candidate to report.
        let pure = bit_inputs(1.0, 1.0);
        let config = SearchConfig::new(0.5, 3).unwrap().require_recycling();
        match search_plan(&pure, &config).unwrap() {
            PlanOutcome::Infeasible { best_fidelity: None } => {}
            other => panic!("expected infeasible without candidates, got {other:?}"),
        }
    }

    #[test]
    fn phase_track_plans_mirror_the_bit_track() {
        let inputs = PlannerInputs::phase(
            PhaseEnsemble::new(3, 0.8).unwrap(),
            PhaseEnsemble::new(3, 0.6).unwrap(),
        );
        let plan =
            feasible(search_plan(&inputs, &SearchConfig::new(0.85, 2).unwrap()).unwrap());
        let actions = plan.actions();
        assert!(actions.contains(&PlanAction::PhaseIdentity));
        assert!(actions.contains(&PlanAction::PhaseResidualRound));
        // Identity branch p' = 0.48/0.56; residual second round reaches
        // 0.876714 with yield (1/2) * 0.44^3 * 0.603306.
        assert!((plan.final_fidelity - 0.48 / 0.56).abs() < 1e-12);
        let residual_yield = 0.5 * 0.44f64.powi(3) * ((0.32f64 / 0.44).powi(2) + (0.12f64 / 0.44).powi(2));
        assert!((plan.total_yield - (0.56 + residual_yield)).abs() < 1e-12);
    }

    #[test]
    fn replay_reproduces_search_totals() {
        let mut inputs = bit_inputs(0.8, 0.6);
        inputs = inputs
            .with_phase(PhaseEnsemble::new(3, 0.7).unwrap(), PhaseEnsemble::new(3, 0.5).unwrap());
        for (target, rounds) in [(0.6, 2), (0.86, 3), (0.9, 4)] {
            let config = SearchConfig::new(target, rounds).unwrap();
            let plan = feasible(search_plan(&inputs, &config).unwrap());
            let (fidelity, total_yield) = replay_plan(&inputs, &plan).unwrap();
            assert!((fidelity - plan.final_fidelity).abs() < 1e-12);
            assert!((total_yield - plan.total_yield).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            SearchConfig::new(0.9, 0),
            Err(Error::RoundRange { got: 0, min: 1, max: 6 })
        ));
        assert!(matches!(SearchConfig::new(0.9, 7), Err(Error::RoundRange { got: 7, .. })));
        assert!(matches!(SearchConfig::new(1.2, 3), Err(Error::ProbabilityRange(_))));
        let empty: PlannerInputs = PlannerInputs { bit_pair: None, phase_pair: None };
        assert!(matches!(
            search_plan(&empty, &SearchConfig::new(0.9, 2).unwrap()),
            Err(Error::NoPlannerInputs)
        ));
    }

    #[test]
    fn plan_serializes_with_snake_case_actions_and_yield_key() {
        let inputs = bit_inputs(0.8, 0.6);
        let plan =
            feasible(search_plan(&inputs, &SearchConfig::new(0.86, 2).unwrap()).unwrap());
        let value = serde_json::to_value(&plan).unwrap();
        let actions: Vec<&str> = value["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|n| n["action"].as_str().unwrap())
            .collect();
        assert_eq!(
            actions,
            vec![
                "identity",
                "residual_second_round",
                "residual_second_round",
                "residual_second_round"
            ]
        );
        assert!(value["streams"][0]["yield"].is_number());
        assert!(value["nodes"][0]["input_fingerprint"].as_str().unwrap().len() == 16);
        assert_eq!(value["streams"][1]["class"], "eeo");
    }

    #[test]
    fn fingerprints_distinguish_inputs() {
        let a = GhzDiagonalEnsemble::symmetric(3, 0.8).unwrap();
        let b = GhzDiagonalEnsemble::symmetric(3, 0.6).unwrap();
        assert_ne!(ghz_pair_fingerprint(&a, &b), ghz_pair_fingerprint(&b, &a));
        assert_eq!(ghz_pair_fingerprint(&a, &b), ghz_pair_fingerprint(&a.clone(), &b.clone()));
    }

    // Independent brute-force reference: enumerate every legal stream
    // combination directly (arbitrary subsets, not the search's pruned
    // prefixes) and keep the best (primary, secondary) pair.
    mod brute {
        use super::*;

        pub struct Candidate {
            pub stream_yield: f64,
            pub fidelity: f64,
            pub recycling: bool,
        }

        fn bit_candidates(
            a: &GhzDiagonalEnsemble,
            b: &GhzDiagonalEnsemble,
            max_rounds: u8,
        ) -> (Vec<Candidate>, Vec<Candidate>, Vec<Vec<Candidate>>) {
            let mut raw = Vec::new();
            for ens in [a, b] {
                raw.push(Candidate {
                    stream_yield: 1.0,
                    fidelity: *ens.fidelity(),
                    recycling: false,
                });
            }
            let mut identity = Vec::new();
            if let Ok(out) = purify_identity(a, b) {
                let mut y = out.branch_probability;
                let mut ens = out.ensemble;
                for depth in 1..=max_rounds {
                    if depth > 1 {
                        let out = purify_identity(&ens, &ens).unwrap();
                        y = 0.5 * y * out.branch_probability;
                        ens = out.ensemble;
                    }
                    identity.push(Candidate {
                        stream_yield: y,
                        fidelity: *ens.fidelity(),
                        recycling: false,
                    });
                }
            }
            // Cross alternatives: index 0 holds the link option (if any);
            // the rest are per-depth per-class-subset residual selections.
            let mut cross: Vec<Vec<Candidate>> = Vec::new();
            if a.n() == 3 && max_rounds >= 2 {
                if let Some((p, bell)) = extract_mixture(a, b).unwrap() {
                    let fused = entanglement_link(&bell, &bell, 1, 1).unwrap();
                    cross.push(vec![Candidate {
                        stream_yield: 0.5 * p,
                        fidelity: *fused.ensemble.fidelity(),
                        recycling: true,
                    }]);
                }
            }
            let mut per_class: Vec<Vec<Candidate>> = Vec::new();
            for c in 1..pattern_count(a.n()) {
                let class = ParityClass::from_index(a.n(), c).unwrap();
                let Ok(out) = cross_residual(a, b, &class) else { continue };
                let y_c = out.branch_probability;
                let mut ens = out.ensemble;
                let mut y = 0.0;
                let mut chain = Vec::new();
                for depth in 2..=max_rounds {
                    let again = second_round(&ens, &ens).unwrap();
                    if depth == 2 {
                        y = 0.5 * y_c * y_c * y_c * again.branch_probability;
                    } else {
                        y = 0.5 * y * again.branch_probability;
                    }
                    ens = again.ensemble;
                    chain.push(Candidate {
                        stream_yield: y,
                        fidelity: *ens.fidelity(),
                        recycling: true,
                    });
                }
                per_class.push(chain);
            }
            // All per-depth nonempty class subsets.
            if !per_class.is_empty() {
                let depths = per_class[0].len();
                for d in 0..depths {
                    for mask in 1u32..(1 << per_class.len()) {
                        let mut subset = Vec::new();
                        for (i, chain) in per_class.iter().enumerate() {
                            if mask & (1 << i) != 0 {
                                subset.push(Candidate {
                                    stream_yield: chain[d].stream_yield,
                                    fidelity: chain[d].fidelity,
                                    recycling: true,
                                });
                            }
                        }
                        cross.push(subset);
                    }
                }
            }
            (raw, identity, cross)
        }

        fn phase_candidates(
            a: &PhaseEnsemble,
            b: &PhaseEnsemble,
            max_rounds: u8,
        ) -> (Vec<Candidate>, Vec<Candidate>, Vec<Vec<Candidate>>) {
            let mut raw = Vec::new();
            for ens in [a, b] {
                raw.push(Candidate { stream_yield: 1.0, fidelity: *ens.p0(), recycling: false });
            }
            let mut identity = Vec::new();
            if let Ok(out) = phase_identity(a, b) {
                let mut y = out.branch_probability;
                let mut ens = out.ensemble;
                for depth in 1..=max_rounds {
                    if depth > 1 {
                        let out = phase_identity(&ens, &ens).unwrap();
                        y = 0.5 * y * out.branch_probability;
                        ens = out.ensemble;
                    }
                    identity.push(Candidate {
                        stream_yield: y,
                        fidelity: *ens.p0(),
                        recycling: false,
                    });
                }
            }
            let mut cross: Vec<Vec<Candidate>> = Vec::new();
            if let Ok(out) = phase_residual(a, b) {
                let y_c = out.branch_probability;
                let mut ens = out.ensemble;
                let mut y = 0.0;
                for depth in 2..=max_rounds {
                    let again = phase_identity(&ens, &ens).unwrap();
                    if depth == 2 {
                        y = 0.5 * y_c * y_c * y_c * again.branch_probability;
                    } else {
                        y = 0.5 * y * again.branch_probability;
                    }
                    ens = again.ensemble;
                    cross.push(vec![Candidate {
                        stream_yield: y,
                        fidelity: *ens.p0(),
                        recycling: true,
                    }]);
                }
            }
            (raw, identity, cross)
        }

        /// Every track mode: no delivery, raw subsets, or purify with an
        /// optional identity depth and an optional cross selection.
        fn track_modes(
            (raw, identity, cross): (Vec<Candidate>, Vec<Candidate>, Vec<Vec<Candidate>>),
            target: f64,
        ) -> Vec<Vec<(f64, f64, bool)>> {
            let keep = |c: &Candidate| c.fidelity + 1e-12 >= target && c.stream_yield > 0.0;
            let flat = |c: &Candidate| (c.stream_yield, c.fidelity, c.recycling);
            let mut modes = vec![Vec::new()];
            for mask in 1u32..(1 << raw.len()) {
                let subset: Vec<_> = raw
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, c)| c)
                    .collect();
                if subset.iter().all(|c| keep(c)) {
                    modes.push(subset.into_iter().map(flat).collect());
                }
            }
            let identity_opts: Vec<Option<&Candidate>> = std::iter::once(None)
                .chain(identity.iter().filter(|c| keep(c)).map(Some))
                .collect();
            let mut cross_opts: Vec<Vec<(f64, f64, bool)>> = vec![Vec::new()];
            for selection in &cross {
                if !selection.is_empty() && selection.iter().all(&keep) {
                    cross_opts.push(selection.iter().map(flat).collect());
                }
            }
            for id in &identity_opts {
                for sel in &cross_opts {
                    if id.is_none() && sel.is_empty() {
                        continue;
                    }
                    let mut streams = Vec::new();
                    if let Some(c) = id {
                        streams.push(flat(c));
                    }
                    streams.extend(sel.iter().copied());
                    modes.push(streams);
                }
            }
            modes
        }

        pub fn best_totals(
            inputs: &PlannerInputs,
            config: &SearchConfig,
        ) -> Option<(f64, f64)> {
            let bit_modes = match &inputs.bit_pair {
                Some((a, b)) => track_modes(
                    bit_candidates(a, b, config.max_rounds),
                    config.target_fidelity,
                ),
                None => vec![Vec::new()],
            };
            let phase_modes = match &inputs.phase_pair {
                Some((a, b)) => track_modes(
                    phase_candidates(a, b, config.max_rounds),
                    config.target_fidelity,
                ),
                None => vec![Vec::new()],
            };
            let mut best: Option<(f64, f64)> = None;
            for bm in &bit_modes {
                for pm in &phase_modes {
                    let all: Vec<_> = bm.iter().chain(pm).collect();
                    if all.is_empty() {
                        continue;
                    }
                    if config.require_recycle && !all.iter().any(|(_, _, r)| *r) {
                        continue;
                    }
                    let total: f64 = all.iter().map(|(y, _, _)| y).sum();
                    let fin =
                        all.iter().map(|(_, f, _)| *f).fold(f64::INFINITY, f64::min);
                    let keys = match config.objective {
                        Objective::YieldFirst => (total, fin),
                        Objective::FidelityFirst => (fin, total),
                    };
                    let better = match best {
                        None => true,
                        Some(cur) => {
                            if (keys.0 - cur.0).abs() > 1e-12 {
                                keys.0 > cur.0
                            } else if (keys.1 - cur.1).abs() > 1e-12 {
                                keys.1 > cur.1
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        best = Some(keys);
                    }
                }
            }
            best
        }
    }

    #[test]
    fn search_matches_brute_force_up_to_three_rounds() {
        let mut cases = vec![
            bit_inputs(0.8, 0.6),
            bit_inputs(0.7, 0.7),
            bit_inputs(0.95, 0.3),
        ];
        cases.push(bit_inputs(0.8, 0.6).with_phase(
            PhaseEnsemble::new(3, 0.7).unwrap(),
            PhaseEnsemble::new(3, 0.5).unwrap(),
        ));
        for inputs in &cases {
            for target in [0.3, 0.6, 0.8, 0.86, 0.9, 0.97, 0.999] {
                for rounds in 1..=3u8 {
                    for objective in [Objective::YieldFirst, Objective::FidelityFirst] {
                        for recycle in [false, true] {
                            let mut config = SearchConfig::new(target, rounds)
                                .unwrap()
                                .with_objective(objective);
                            if recycle {
                                config = config.require_recycling();
                            }
                            let searched = search_plan(inputs, &config).unwrap();
                            let reference = brute::best_totals(inputs, &config);
                            match (&searched, reference) {
                                (PlanOutcome::Feasible(plan), Some(keys)) => {
                                    let got = match objective {
                                        Objective::YieldFirst => {
                                            (plan.total_yield, plan.final_fidelity)
                                        }
                                        Objective::FidelityFirst => {
                                            (plan.final_fidelity, plan.total_yield)
                                        }
                                    };
                                    assert!(
                                        (got.0 - keys.0).abs() < 1e-9
                                            && (got.1 - keys.1).abs() < 1e-9,
                                        "totals diverge at target {target}, rounds {rounds}, \
                                         {objective:?}, recycle {recycle}: \
                                         searched {got:?}, brute {keys:?}"
                                    );
                                }
                                (PlanOutcome::Infeasible { .. }, None) => {}
                                (got, want) => panic!(
                                    "feasibility diverges at target {target}, rounds {rounds}, \
                                     {objective:?}, recycle {recycle}: searched {got:?}, \
                                     brute {want:?}"
                                ),
                            }
                        }
                    }
                }
            }
        }
    }
}
