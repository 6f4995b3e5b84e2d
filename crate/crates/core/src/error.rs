use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree sequence is empty")]
    EmptySequence,

    #[error("sum of degrees is odd (N = {0})")]
    OddHalfEdgeCount(u64),

    #[error("vertex {vertex} has degree {degree}, below the minimum of {min}")]
    DegreeTooSmall { vertex: usize, degree: u32, min: u32 },

    #[error("degree {0} is not supported by this distribution")]
    UnsupportedDegree(u32),

    #[error("probabilities sum to {0}, expected 1")]
    InvalidPmf(f64),

    #[error("could not reach an even degree sum after {0} redraws")]
    ParityRetriesExhausted(usize),

    #[error("quantile level {0} is outside (0, 1)")]
    QuantileOutOfRange(f64),

    #[error("degenerate statistics: {0}")]
    DegenerateStats(String),

    #[error("σ² = 0: the degree sequence is regular")]
    DegenerateSigma,

    #[error("half-edge {0} is already paired")]
    AlreadyPaired(usize),

    #[error("no unpaired half-edge left to pair with {0}")]
    NoUnpairedLeft(usize),

    #[error("odd number ({0}) of unpaired half-edges")]
    OddResidue(usize),

    #[error("pairing is incomplete ({paired} of {total} half-edges paired)")]
    IncompletePairing { paired: usize, total: usize },

    #[error("index {0} is not paired")]
    NotPaired(usize),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("symmetry violated at x = {x}, y = {y}: {detail}")]
    SymmetryViolation { x: usize, y: usize, detail: String },

    #[error("probability mass drifted to {0}")]
    MassDrift(f64),

    #[error("distance never fell below {eps} within {t_max} steps")]
    CurveTooShort { eps: f64, t_max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("parse error: {0}")]
    Parse(String),
}
