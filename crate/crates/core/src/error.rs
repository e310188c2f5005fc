use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // comb index arithmetic
    #[error("pump index {p} is even; nondegenerate downconversion requires an odd pump index")]
    EvenPumpIndex { p: i64 },
    #[error("invalid OPO spec: {0}")]
    InvalidOpoSpec(String),
    #[error("free spectral range must be positive, got {0}")]
    NonpositiveFsr(f64),
    #[error("copy label {k} out of range for {copies} copies")]
    CopyLabelOutOfRange { k: i64, copies: i64 },
    #[error("internal index error: {0}")]
    InternalIndex(String),

    // H-graph
    #[error("comb window [{n_min}, {n_max}] is empty")]
    EmptyWindow { n_min: i64, n_max: i64 },
    #[error("at least one OPO is required")]
    NoOpos,
    #[error("H-graph is not a matching: {0}")]
    NotAMatching(String),

    // interferometer
    #[error(
        "no real Hadamard matrix of order {0} is available from the Sylvester construction \
         (orders must be powers of two); supply a normalized Hadamard matrix of that order \
         as a user splitter instead"
    )]
    UnsupportedOrder(usize),
    #[error("splitter matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("splitter is not orthogonal: max |H H^T - I| = {deviation:e}")]
    NotOrthogonal { deviation: f64 },
    #[error("splitter is not balanced: entry ({row}, {col}) has magnitude {magnitude}, expected {expected}")]
    NotBalanced {
        row: usize,
        col: usize,
        magnitude: f64,
        expected: f64,
    },
    #[error("splitter order {splitter} does not match macronode size {macronode}")]
    OrderMismatch { splitter: usize, macronode: usize },
    #[error("macronode {m} has {found} member qumodes, expected {expected}")]
    RaggedMacronode { m: i64, found: usize, expected: usize },

    // gaussian engine
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("dense oracle limited to {limit} modes, got {n}")]
    OracleSizeExceeded { n: usize, limit: usize },
    #[error("dense covariance limited to {limit} modes, got {n}")]
    CovarianceTooLarge { n: usize, limit: usize },

    // lattice verification
    #[error("bad macronode partition: {0}")]
    BadPartition(String),

    // configuration and I/O
    #[error("parse error{}: {message}", location(.line, .column))]
    Parse {
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read splitter file {path}: {message}")]
    SplitterFile { path: PathBuf, message: String },
}

fn location(line: &Option<usize>, column: &Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" at line {l}, column {c}"),
        (Some(l), None) => format!(" at line {l}"),
        _ => String::new(),
    }
}

impl Error {
    /// Name of the pipeline module that raised the error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            EvenPumpIndex { .. }
            | InvalidOpoSpec(_)
            | NonpositiveFsr(_)
            | CopyLabelOutOfRange { .. }
            | InternalIndex(_) => "comb",
            EmptyWindow { .. } | NoOpos | NotAMatching(_) => "hgraph",
            UnsupportedOrder(_)
            | NotSquare { .. }
            | NotOrthogonal { .. }
            | NotBalanced { .. }
            | OrderMismatch { .. }
            | RaggedMacronode { .. } => "interferometer",
            DimensionMismatch { .. }
            | NotPositiveDefinite(_)
            | OracleSizeExceeded { .. }
            | CovarianceTooLarge { .. } => "gaussian",
            BadPartition(_) => "lattice",
            Parse { .. } | Validation(_) | Io { .. } | SplitterFile { .. } => "io",
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
