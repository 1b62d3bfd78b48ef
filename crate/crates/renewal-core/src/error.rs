use thiserror::Error;

/// Unified error type for model construction, solving, fitting and maximizing.
#[derive(Debug, Error)]
pub enum Error {
    /// A direct argument is malformed (non-finite, wrong ordering, bad table).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Scenario data violates a structural requirement (ordering, signs, domains).
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Control schedule violates a structural requirement.
    #[error("invalid controls: {0}")]
    InvalidControls(String),

    /// No admissible step count aligns every breakpoint with the time grid.
    #[error("grid alignment failed: {0}")]
    GridAlignment(String),

    /// Non-finite value produced mid-solve; reports the offending grid cell.
    #[error("numerical failure at t = {t}, age = {age}: {message}")]
    Numerical { t: f64, age: f64, message: String },

    /// A characteristic cannot reach the requested age inside the search window.
    #[error("age {age} not reachable along the characteristic from (t0 = {t0}, a0 = {a0})")]
    Unreachable { age: f64, t0: f64, a0: f64 },

    /// Fit design matrix is numerically singular.
    #[error("fit design is ill-conditioned (estimated condition {cond:.3e})")]
    IllConditioned { cond: f64 },

    /// Requested enumeration exceeds the configured cap.
    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),

    /// Vector/point dimension does not match the declared variables.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A fitted polynomial failed its own interpolation diagnostics.
    #[error("fit diagnostics failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
