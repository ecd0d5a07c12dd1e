use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // graph construction
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("edge {edge} has non-positive or non-finite length {length}")]
    NonPositiveLength { edge: usize, length: f64 },
    #[error("edge {edge} references vertex {vertex}, but the graph has {vertex_count} vertices")]
    DanglingEndpoint {
        edge: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("Robin vertex {vertex} is not a vertex of the graph")]
    InvalidRobinVertex { vertex: usize },
    #[error("coupling must be finite and non-negative, got {0}")]
    InvalidCoupling(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // scattering / eigensolve
    #[error("wave number must be positive, got {0}")]
    ZeroWaveNumber(f64),
    #[error("step policy violated near k = {k}: {reason}")]
    StepPolicyViolation { k: f64, reason: String },
    #[error("tolerance not met at k = {k}: {reason}")]
    ToleranceNotMet { k: f64, reason: String },
    #[error("k = {k} lies beyond the scanned range (k_cap = {k_cap})")]
    OutOfScannedRange { k: f64, k_cap: f64 },
    #[error("eigenvalue index {n} is multiple along the whole homotopy")]
    IndexCrossingAmbiguity { n: usize },
    #[error("eigenvalue decomposition failed: {0}")]
    ConvergenceFailure(String),

    // eigenfunctions
    #[error("numerical kernel at k = {k} has dimension {found}, expected {expected}")]
    KernelDimensionMismatch {
        k: f64,
        expected: usize,
        found: usize,
    },
    #[error("vertex {vertex}: incident edges disagree on the vertex value by {spread:e}")]
    ContinuityViolation { vertex: usize, spread: f64 },
    #[error("position {x} outside edge {edge} of length {length}")]
    OutOfRange { edge: usize, x: f64, length: f64 },

    // statistics and bounds
    #[error("spectrum has {available} eigenvalues, {required} required")]
    InsufficientSpectrum { available: usize, required: usize },
    #[error("star decomposition has a Robin star of zero length at vertex {vertex}")]
    DegenerateDecomposition { vertex: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),
    #[error("finite-difference mesh too coarse: {0} points per edge (minimum 8)")]
    MeshTooCoarse(usize),

    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
