use std::fmt;

use thiserror::Error;

/// Location-tagged failure from the circuit description parser.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownGate(String),
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    DuplicateTargets(usize),
    ProbabilityOutOfRange(String),
    Invalid(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::UnknownGate(name) => write!(f, "unknown gate `{name}`"),
            ParseErrorKind::QubitOutOfRange { qubit, n_qubits } => {
                write!(f, "qubit {qubit} out of range for {n_qubits} qubits")
            }
            ParseErrorKind::DuplicateTargets(q) => write!(f, "duplicate targets: qubit {q}"),
            ParseErrorKind::ProbabilityOutOfRange(p) => {
                write!(f, "declared probability {p} outside (0, 1]")
            }
            ParseErrorKind::Invalid(msg) => write!(f, "invalid circuit: {msg}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    /// `step` is the 1-based step index when known.
    #[error("post-selected outcome{} has probability {prob:e}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    ZeroProbabilityOutcome { step: Option<usize>, prob: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid state specification: {0}")]
    InvalidState(String),

    #[error("block and measurement roles overlap: {0}")]
    MixedRoles(String),

    #[error("clock step {t} out of range for clock dimension {dim_clock}")]
    ClockStepOutOfRange { t: usize, dim_clock: usize },

    #[error("probability {0} outside (0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("operator is not a projector (‖P² − P‖ = {0:e})")]
    NotIdempotent(f64),

    #[error("post-selection is not tame: {0}")]
    NotTame(String),

    #[error("measurement at step {0} has no certified post-selection probability")]
    TamenessRequired(usize),

    #[error("circuit has no output qubit")]
    MissingOutputQubit,

    #[error("circuit contains a measurement at step {0}; W is only defined for unitary circuits")]
    NonUnitaryCircuit(usize),

    #[error("matrix dimension {dim} exceeds dense limit {limit}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
    },

    #[error("eigenvalue {value:e} lies within a decade of kernel tolerance {kernel_tol:e}")]
    AmbiguousKernelEdge { value: f64, kernel_tol: f64 },

    #[error("spectrum has no eigenvalue above the kernel tolerance")]
    NoNonzeroEigenvalue,

    #[error("zero vector")]
    ZeroVector,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
