//! Brute-force pure-state reference implementation of every protocol step.
//!
//! A GHZ-diagonal ensemble is simulated component by component: each weighted
//! basis state is propagated through an explicit two-copy measurement circuit
//! as a real-amplitude pure state, and surviving branches are re-assembled
//! into output ensembles. Nothing here shares code with the closed-form
//! modules, so agreement between the two is a meaningful check. Sizes are
//! capped at [`crate::MAX_ORACLE_PHOTONS`] photons per copy because state
//! vectors grow as `4^n`.

pub mod circuit;
pub mod protocols;
pub mod state;

pub use circuit::{run_branches, Branch, CircuitOp, CircuitSpec, Gate, Predicate};
pub use protocols::{
    extract_circuit, link_circuit, oracle_bitflip, oracle_extract, oracle_link, oracle_phase,
    phase_circuit, purify_circuit, ClassBranch,
};
pub use state::PureState;
