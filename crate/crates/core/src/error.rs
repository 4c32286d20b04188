use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon number {0} out of range (need 2..={1})")]
    PhotonCount(u8, u8),

    #[error("photon numbers differ: {0} vs {1}")]
    PhotonMismatch(u8, u8),

    #[error("weight vector has {got} entries, expected {expected}")]
    WeightLength { got: usize, expected: usize },

    #[error("negative weight at index {0}")]
    NegativeWeight(usize),

    #[error("weights sum to {got} instead of 1")]
    NotNormalized { got: f64 },

    #[error("pattern 0x{bits:x} does not fit in {n} bits")]
    PatternWidth { bits: u16, n: u8 },

    #[error("pattern index {index} out of range for {n} photons")]
    PatternIndex { index: u16, n: u8 },

    #[error("branch probability is zero; no conditional ensemble exists")]
    DegenerateBranch,

    #[error("operation requires a cross parity class, got the identity class")]
    IdentityClass,

    #[error("keep set mixes even- and odd-parity positions of the class pattern")]
    MixedParityKeep,

    #[error("keep set must select at least 2 of the {n} photons")]
    KeepTooSmall { n: u8 },

    #[error("keep set contains a photon index outside 1..={n} or a duplicate")]
    BadKeepIndex { n: u8 },

    #[error("subsystems share {got} parties; linking requires exactly 1")]
    SharedParties { got: usize },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),

    #[error("round count {got} outside {min}..={max}")]
    RoundRange { got: u8, min: u8, max: u8 },

    #[error("unknown region predicate `{0}`")]
    UnknownPredicate(String),

    #[error("grid needs at least 2 steps and min <= max")]
    GridSpec,

    #[error("predicate requires a rounds parameter")]
    MissingRounds,

    #[error("{0}")]
    Parse(String),

    #[error("oracle internal inconsistency: {0}")]
    OracleInconsistency(String),

    #[error("planner needs at least one declared input pair")]
    NoPlannerInputs,
}
