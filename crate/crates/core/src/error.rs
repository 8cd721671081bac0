//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A frequency, step or size outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The permittivity is (numerically) real and negative, so the sign of
    /// the wavenumber cannot be chosen from the passivity condition.
    #[error("wavenumber branch is ambiguous at omega = {omega:e} rad/s (eps = {eps_re:e} + {eps_im:e}i)")]
    Branch { omega: f64, eps_re: f64, eps_im: f64 },

    /// Richardson extrapolation of a Taylor coefficient did not settle.
    #[error("extrapolation of {coefficient} did not converge (relative change {change:e})")]
    Convergence { coefficient: String, change: f64 },

    #[error("invalid grid: {0}")]
    Grid(String),

    /// A modelling assumption of the propagation equations is violated.
    #[error("{rule}: {detail}")]
    Precondition { rule: &'static str, detail: String },

    /// The split-step monitor found a sub-step phase that is too large.
    #[error("step rejected at x = {x:e} m: {detail}")]
    StepRejected { x: f64, detail: String },

    #[error("empty ensemble")]
    EmptyEnsemble,

    /// Failure inside an ensemble run, tagged with where it happened.
    #[error("trajectory {trajectory} at x = {x:e} m: {source}")]
    Trajectory {
        trajectory: usize,
        x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
