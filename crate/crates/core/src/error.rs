use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the pricing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VgError {
    /// Gamma evaluated at (or within the guard band of) a non-positive integer.
    #[error("pole: gamma evaluated at {x}, within 1e-12 of a non-positive integer")]
    Pole { x: f64 },

    #[error("overflow: {what} exceeds the representable range")]
    Overflow { what: String },

    #[error("domain error: {0}")]
    Domain(String),

    /// The log argument `1 - theta*nu - sigma^2*nu/2` is not positive.
    #[error("martingale adjustment undefined: 1 - theta*nu - sigma^2*nu/2 = {log_arg} <= 0")]
    MartingaleUndefined { log_arg: f64 },

    #[error("degenerate alpha: tau/nu - 1/2 = {alpha} is within 1e-8 of an integer")]
    DegenerateAlpha { alpha: f64 },

    /// The truncated series did not meet the convergence test. The partial sum
    /// is kept so that callers reproducing truncation tables can still use it.
    #[error(
        "series did not converge at max_order {max_order}: value {value}, truncation estimate {truncation_estimate}"
    )]
    NonConvergence {
        value: f64,
        truncation_estimate: f64,
        max_order: usize,
    },

    #[error("branch cut: characteristic function base is a non-positive real at u = {u}")]
    BranchCut { u: Complex64 },

    #[error("damping a = {a} outside the admissible range (0, {a_max})")]
    DampingOutOfRange { a: f64, a_max: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl VgError {
    /// Short machine-readable tag, used by the command line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            VgError::Pole { .. } => "pole",
            VgError::Overflow { .. } => "overflow",
            VgError::Domain(_) => "domain",
            VgError::MartingaleUndefined { .. } => "martingale_undefined",
            VgError::DegenerateAlpha { .. } => "degenerate_alpha",
            VgError::NonConvergence { .. } => "non_convergence",
            VgError::BranchCut { .. } => "branch_cut",
            VgError::DampingOutOfRange { .. } => "damping_out_of_range",
            VgError::Unsupported(_) => "unsupported",
            VgError::InvalidInput(_) => "invalid_input",
        }
    }
}

pub type Result<T> = std::result::Result<T, VgError>;
