use thiserror::Error;

/// Errors raised by validation, the LP engine, and the inverse solvers.
///
/// Row indices carried by variants are 0-based; `Display` renders them 1-based
/// to match how constraints are numbered in reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in `{field}`")]
    NonFinite { field: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("observed point is the zero vector")]
    ZeroObservation,

    #[error("norm {0} is not supported by this model")]
    UnsupportedNorm(&'static str),

    #[error("simplex failed: {0}")]
    NumericalFailure(String),

    #[error("inverse problem infeasible (phase-one residual {phase_one:.3e})")]
    Infeasible { phase_one: f64 },

    #[error("observed point violates nominal constraint {}", .row + 1)]
    NominalInfeasible { row: usize },

    #[error("duality gap unbounded below in subproblem {}", .row + 1)]
    UnboundedGap { row: usize, ray: Vec<f64> },

    #[error("budget box intersected with side constraints is empty")]
    EmptyThetaOmega,

    #[error("no constraint can be made active by a budget choice")]
    EmptyIhat,

    #[error("grid has {points} points, above the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("region plotting needs 2 variables, problem has {0}")]
    DimensionNotPlottable(usize),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
