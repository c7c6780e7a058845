use thiserror::Error;

/// Errors raised by the core algorithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("operator is not an algebraic curvature operator: {0}")]
    InvalidOperator(String),

    #[error("unsupported flat factor ℝ^{0}; only k = 1 or 2 is allowed")]
    UnsupportedFactor(usize),

    #[error("frame search needs dimension ≥ 4, got {0}")]
    DimensionTooSmall(usize),

    #[error("bisection bracket exhausted: upper end {upper} is not in the cone")]
    BracketFailure { upper: f64 },

    #[error("singular time: scale factor {scale} at t = {t} is not positive")]
    SingularTime { t: f64, scale: f64 },

    #[error("step rejected: dt = {dt} exceeds the stability bound {bound}")]
    StepRejected { dt: f64, bound: f64 },

    #[error("cell {0} is outside the active domain")]
    MaskedDomain(usize),

    #[error("cells {0} and {1} are not connected in the active domain")]
    Unreachable(usize, usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("time {t} is outside the domain: {reason}")]
    OutOfDomain { t: f64, reason: String },

    #[error("linear solver did not converge: residual {residual:e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("limit ladder is not Cauchy: increment {increment:e} exceeds {tol:e}")]
    NonConvergentLimit { increment: f64, tol: f64 },

    #[error("infeasible constants: {0}")]
    InfeasibleConstants(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
