use thiserror::Error;

/// Errors raised anywhere in the compilation and query pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown {kind} `{name}` at {line}:{column}")]
    UnknownName {
        kind: &'static str,
        name: String,
        line: usize,
        column: usize,
    },

    #[error("duplicate {kind} declaration `{name}` at line {line}")]
    Duplicate {
        kind: &'static str,
        name: String,
        line: usize,
    },

    #[error("unsupported in ALCI pipeline: {0}")]
    Unsupported(String),

    #[error("symbol `{0}` has no variable in the variable map")]
    UnknownSymbol(String),

    #[error("malformed DIMACS input at line {line}: {message}")]
    Dimacs { line: usize, message: String },

    #[error("malformed circuit file at line {line}: {message}")]
    CircuitFormat { line: usize, message: String },

    #[error("operands were built over different vtrees")]
    VtreeMismatch,

    #[error("variable {0} is not covered by the vtree")]
    UnknownVariable(usize),

    #[error("node cap of {cap} nodes exceeded")]
    NodeCap { cap: usize },

    #[error("expected length {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("circuit is not smooth")]
    NotSmooth,

    #[error("evidence has zero probability under the circuit")]
    ZeroProbabilityEvidence,

    #[error("circuit is unsatisfiable")]
    Unsatisfiable,

    #[error("enumeration limit of {limit} models exceeded")]
    LimitExceeded { limit: usize },

    #[error("covariance matrix is not positive definite after {attempts} attempts")]
    NotPositiveDefinite { attempts: usize },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("explicit enumeration capped at {cap} variables, got {found}")]
    EnumerationCap { cap: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
