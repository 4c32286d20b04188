//! Recurrence purification calculator for multipartite GHZ-diagonal ensembles.
//!
//! Two remote ensembles of N-photon GHZ-diagonal states, generally with
//! different weight vectors, are combined pairwise through transversal parity
//! checks. Every parity outcome is kept and modeled:
//!
//! * the identity outcome yields a purified ensemble ([`bitflip::purify_identity`]),
//! * each cross outcome yields a residual ensemble that can be relabeled and
//!   purified in a second round ([`bitflip::cross_residual`], [`bitflip::second_round`]),
//! * cross outcomes alternatively yield smaller entangled subsystems that can be
//!   fused back into full-size states ([`link::extract_subsystem`],
//!   [`link::entanglement_link`]),
//! * phase-error purification is tracked on a two-weight ensemble
//!   ([`phaseflip`]).
//!
//! [`metrics`] aggregates branch yields and average fidelities for whole
//! schemes, [`planner`] searches purification sequences against a fidelity
//! target, and [`oracle`] re-derives every branch from first principles with a
//! dense pure-state circuit simulator so the closed forms can be machine
//! checked.
//!
//! All weight arithmetic is generic over [`scalar::Scalar`]: `f64` for sweeps
//! and `num::BigRational` for exact boundary and equivalence checks.

pub mod bitflip;
pub mod ensemble;
pub mod error;
pub mod link;
pub mod metrics;
pub mod oracle;
pub mod par;
pub mod pattern;
pub mod phaseflip;
pub mod planner;
pub mod scalar;

pub use ensemble::{GhzDiagonalEnsemble, PurifyOutcome};
pub use error::Error;
pub use pattern::{ErrorPattern, ParityClass};
pub use phaseflip::PhaseEnsemble;
pub use scalar::Scalar;

/// Largest photon number accepted by ensemble constructors (dense weight
/// vectors hold `2^(n-1)` entries).
pub const MAX_PHOTONS: u8 = 12;

/// Largest photon number accepted by the pure-state oracle (states span
/// `2^(2n)` amplitudes).
pub const MAX_ORACLE_PHOTONS: u8 = 5;

/// Absolute tolerance used for `f64` validation and equality checks.
pub const F64_TOL: f64 = 1e-12;

pub type Result<T> = std::result::Result<T, Error>;
