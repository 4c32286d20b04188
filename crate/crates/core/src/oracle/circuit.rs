//! Circuit descriptions and exhaustive branch execution.

use super::state::PureState;
use crate::scalar::Scalar;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
}

/// Predicate over the outcome record accumulated so far. Indices refer to
/// measurement ordinals (the order in which measuring ops appear in the
/// circuit), and outcomes are recorded as `0`/`1`: even/odd for parity
/// checks, `|0>`/`|1>` for Z, `+`/`-` for X.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    /// True when an odd number of the listed outcomes are 1.
    OddCount(Vec<usize>),
    /// True when the listed outcome equals the value.
    Equals(usize, u8),
}

impl Predicate {
    fn holds(&self, outcomes: &[u8]) -> bool {
        match self {
            Predicate::OddCount(steps) => {
                steps.iter().map(|&s| u32::from(outcomes[s])).sum::<u32>() % 2 == 1
            }
            Predicate::Equals(step, v) => outcomes[*step] == *v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CircuitOp {
    Unitary(Gate),
    /// Nondestructive two-qubit parity comparison; records even/odd.
    ParityCheck(usize, usize),
    MeasureZ(usize),
    MeasureX(usize),
    /// Classically controlled gate.
    When(Predicate, Gate),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub ops: Vec<CircuitOp>,
}

/// One leaf of the outcome tree.
#[derive(Debug, Clone)]
pub struct Branch<T = f64> {
    /// Measurement outcomes in circuit order.
    pub outcomes: Vec<u8>,
    pub probability: T,
    pub state: PureState<T>,
}

/// Runs every measurement branch of `circuit` on a normalized input state.
/// Zero-probability branches are pruned; the surviving probabilities sum
/// to 1.
pub fn run_branches<T: Scalar>(circuit: &CircuitSpec, input: &PureState<T>) -> Result<Vec<Branch<T>>> {
    assert_eq!(circuit.n_qubits, input.n_qubits());
    let mut leaves = Vec::new();
    let mut stack = vec![(input.clone(), 0usize, Vec::new())];
    while let Some((mut state, mut at, outcomes)) = stack.pop() {
        let mut split = None;
        while at < circuit.ops.len() {
            match &circuit.ops[at] {
                CircuitOp::Unitary(g) => apply(&mut state, *g),
                CircuitOp::When(pred, g) => {
                    if pred.holds(&outcomes) {
                        apply(&mut state, *g);
                    }
                }
                op => {
                    split = Some(op.clone());
                    break;
                }
            }
            at += 1;
        }
        match split {
            None => {
                let probability = state.norm_sq();
                leaves.push(Branch { outcomes, probability, state });
            }
            Some(op) => {
                for v in [0u8, 1u8] {
                    let next = match op {
                        CircuitOp::ParityCheck(a, b) => state.project_parity(a, b, v == 1),
                        CircuitOp::MeasureZ(q) => state.project_z(q, v == 1),
                        CircuitOp::MeasureX(q) => state.project_x(q, v == 1),
                        _ => unreachable!(),
                    };
                    if next.is_vanishing() {
                        continue;
                    }
                    let mut rec = outcomes.clone();
                    rec.push(v);
                    stack.push((next, at + 1, rec));
                }
            }
        }
    }
    leaves.sort_by(|a, b| a.outcomes.cmp(&b.outcomes));
    Ok(leaves)
}

fn apply<T: Scalar>(state: &mut PureState<T>, gate: Gate) {
    match gate {
        Gate::H(q) => state.apply_h(q),
        Gate::X(q) => state.apply_x(q),
        Gate::Z(q) => state.apply_z(q),
    }
}
