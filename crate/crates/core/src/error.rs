use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("CFL violation: dt = {dt:e} exceeds the stable limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("profile lost monotonicity: slope {slope:e} at s = {s} (t = {t})")]
    MonotonicityLost { slope: f64, s: f64, t: f64 },

    #[error("profile is not invertible: minimal slope {min_slope:e}")]
    NotInvertible { min_slope: f64 },

    #[error("barrier slope collapsed at t = {t} before reaching the target value")]
    SlopeCollapse { t: f64 },

    #[error("barrier integration exhausted the admissible span {span}")]
    DomainExhausted { span: f64 },

    #[error("no sign change of the shooting function in [{lo}, {hi}]")]
    BracketingFailure { lo: f64, hi: f64 },

    #[error("degenerate operator: {0}")]
    DegenerateOperator(String),

    #[error("two-sided matching failed: {0}")]
    MatchingFailure(String),

    #[error("no convergence after {iterations} iterations (last value {value:e}, residual {residual:e})")]
    NonConvergence { iterations: usize, value: f64, residual: f64 },

    #[error("field overflow: sup-norm {norm:e}")]
    Overflow { norm: f64 },

    #[error("no profile slice at time {0}")]
    TimeMismatch(f64),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("value {value} outside the invertible range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("expression parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
