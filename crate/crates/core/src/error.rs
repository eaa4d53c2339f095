use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("index range {from}..={to} out of bounds for grid with {len} nodes")]
    IndexOutOfRange { from: usize, to: usize, len: usize },

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("time {t} is not a grid node")]
    NotAGridNode { t: f64 },

    #[error("grid mismatch: expected {expected} steps on horizon {expected_horizon}, found {found} steps on horizon {found_horizon}")]
    GridMismatch { expected: usize, expected_horizon: f64, found: usize, found_horizon: f64 },

    #[error("path value at node {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("domain error: {what} (value {value})")]
    Domain { what: String, value: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("bisection bracket [{lo}, {hi}] has no sign change (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("residual audit failed: residual {residual:e} exceeds {limit:e}")]
    AuditFailed { residual: f64, limit: f64 },

    #[error("objective undefined on every path ({failed} domain errors)")]
    AllPathsFailed { failed: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }

    pub fn domain(what: impl Into<String>, value: f64) -> Self {
        Error::Domain { what: what.into(), value }
    }

    /// Short machine-readable tag used in `error.json`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::TimeOutOfRange { .. } => "time_out_of_range",
            Error::NotAGridNode { .. } => "not_a_grid_node",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::Domain { .. } => "domain",
            Error::NonConvergence { .. } => "non_convergence",
            Error::BracketFailure { .. } => "bracket_failure",
            Error::AuditFailed { .. } => "audit_failed",
            Error::AllPathsFailed { .. } => "all_paths_failed",
            Error::Io(_) => "io",
            Error::Json(_) => "config_parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
