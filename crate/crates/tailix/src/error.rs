//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by distribution construction, estimators, theory
/// formulas, the quadrature oracle, and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Distribution or theory parameters violate their preconditions
    /// (e.g. `c1 <= 0`, `beta <= alpha`).
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// No support start `x0` with `S(x0) = 1` exists on the monotone
    /// branch of the survival function (strongly negative `c2`).
    #[error("infeasible tail: {0}")]
    InfeasibleTail(String),

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root finder or other numeric routine failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Tuning parameter (`k`, `m`, `s`, `r`) out of range for the sample.
    #[error("tuning error: {0}")]
    Tuning(String),

    /// Data violates the positivity requirement of log/ratio estimators.
    #[error("positivity error: {0}")]
    Positivity(String),

    /// The estimator hit a degenerate configuration on this sample
    /// (tied order-statistic gaps, `M_N = 0`, zero Hill estimate, ...).
    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    /// A generalized-DPR statistic fell outside the invertible range of
    /// its kernel map `h_f`.
    #[error("inversion error: {0}")]
    Inversion(String),

    /// Kernel evaluation impossible (zero block ratio for log/negpower).
    #[error("kernel error: {0}")]
    Kernel(String),

    /// Adaptive quadrature could not reach the requested tolerance
    /// within the subdivision budget.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// Too few observations for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Experiment configuration cannot be resolved before the run.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Every replicate of an experiment was degenerate.
    #[error("all replicates degenerate")]
    AllDegenerate,
}

impl Error {
    /// Replicate-level degeneracies are recorded and excluded by the
    /// simulation harness; anything else aborts the run.
    pub fn is_replicate_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_) | Error::Inversion(_) | Error::Kernel(_) | Error::Positivity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
