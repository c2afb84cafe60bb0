use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid too coarse: step {h} exceeds every piece diameter")]
    GridTooCoarse { h: f64 },

    #[error("empty union")]
    EmptyUnion,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operator vanishes at {0:?}")]
    OperatorVanishes(Vec<f64>),

    #[error("not quasiconvex / not sub-boundarily constant: {0}")]
    NotQuasiconvex(String),

    #[error("segment leaves the constraint set at t = {t}")]
    SegmentLeavesSet { t: f64 },

    #[error("not a fixed point: {0:?}")]
    NotFixedPoint(Vec<f64>),

    #[error("constraint set has empty interior")]
    EmptyInterior,

    #[error("membership pattern violated in probe {probe}: {reason}")]
    ProbeMembership { probe: usize, reason: String },

    #[error("reformulation mismatch: {0}")]
    ReformulationMismatch(String),

    #[error("decomposition mismatch: {0}")]
    DecompositionMismatch(String),

    #[error("NI mismatch: {0}")]
    NiMismatch(String),

    #[error("no follower equilibria anywhere")]
    NoFollowerEquilibria,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Errors raised when two independent routes to the same set disagree.
    pub fn is_consistency_failure(&self) -> bool {
        matches!(
            self,
            Error::ReformulationMismatch(_)
                | Error::DecompositionMismatch(_)
                | Error::NiMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
