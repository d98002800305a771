use thiserror::Error;

/// Errors raised by the operators, residuals and solvers of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A Fourier multiplier is not finite (or breaks reality symmetry) at a grid wavenumber.
    #[error("multiplier symbol undefined at wavenumber {xi}: {reason}")]
    SymbolDomain { xi: f64, reason: String },

    /// An operator undefined on constants received a field with non-negligible mean.
    #[error("zero-mode error: mean {mean:e} exceeds tolerance {tolerance:e}")]
    ZeroMode { mean: f64, tolerance: f64 },

    /// |1 + W_alpha| dropped below the admissibility bound.
    #[error("degenerate profile: min |1 + W_alpha| = {min_modulus:e} < delta = {delta:e}")]
    Degeneracy { min_modulus: f64, delta: f64 },

    /// The logarithm of 1 + W_alpha has no continuous zero-winding branch.
    #[error("logarithm branch error: {0}")]
    LogBranch(String),

    /// An operation was invoked outside its documented regime.
    #[error("usage error: {0}")]
    Usage(String),

    /// A transcendental evaluation overflowed.
    #[error("magnitude error: {0}")]
    Magnitude(String),

    /// Input/output shapes disagree (grid mismatch, sample count, ...).
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, Error>;
