use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Error, Debug)]
pub enum GpeError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("the two fields are discretized on different bases")]
    BasisMismatch,

    #[error("cannot normalize an identically zero field")]
    DegenerateState,

    #[error("basis too small for the requested problem: {0}")]
    DegenerateBasis(String),

    #[error("symmetric tridiagonal eigensolve failed for {nodes} nodes")]
    EigenSolveFailure { nodes: usize },

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("line search failed after {backtracks} backtracks (step {last_step:.3e})")]
    LineSearchFailure { backtracks: usize, last_step: f64 },

    #[error("Thomas-Fermi geometry undefined: {quantity} = {value:.6e}")]
    SingularCoupling { quantity: String, value: f64 },

    #[error("Thomas-Fermi engine requires unit trap frequencies and unit masses, got {0}")]
    UnsupportedAnisotropy(String),

    #[error("no Thomas-Fermi chemical potentials found: {0}")]
    NoSolution(String),

    #[error("mask removed component {component}: remaining mass {mass:.3e} before renormalization")]
    MaskCollapse { component: usize, mass: f64 },

    #[error("split line does not separate the trap centers: {0}")]
    InvalidSplit(String),

    #[error("limit-property check failed:\n{0}")]
    PropertyViolation(String),

    #[error("need at least {required} sweep records spanning {decades} decades of kappa, got {got}")]
    InsufficientRecords {
        required: usize,
        decades: f64,
        got: usize,
    },

    #[error("malformed file {path}: {reason}")]
    ParseError { path: String, reason: String },

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GpeError>;
