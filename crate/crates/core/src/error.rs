use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates the documented precondition of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not keep the local error below tolerance.
    #[error("integration failure at r = {at}: {reason}")]
    Integration { at: f64, reason: String },

    /// The shot never reached zero on the requested interval.
    #[error("no zero within r_max = {r_max}: supercritical or r_max too small")]
    NoZero { r_max: f64 },

    /// An iterative solver stopped without meeting its tolerance.
    #[error("numeric error: {reason} (bracket [{lo}, {hi}])")]
    Numeric { reason: String, lo: f64, hi: f64 },

    /// The supplied bracket does not enclose the requested root or eigenvalue.
    #[error("bracketing error on [{lo}, {hi}]: {reason}")]
    Bracket { lo: f64, hi: f64, reason: String },

    /// Requested Morse index at a parameter where the linearization is singular.
    #[error("at bifurcation point: alpha = {alpha} has |Lambda_{j} + sigma_{k}| = {gap:e}")]
    Degenerate {
        alpha: f64,
        j: usize,
        k: u32,
        gap: f64,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
