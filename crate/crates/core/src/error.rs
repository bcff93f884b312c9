use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CcdError {
    /// Input violates a documented precondition (normalization, parameter ranges, grids).
    #[error("validation error: {0}")]
    Validation(String),

    /// Drive parameters that make a frame transformation or gate undefined.
    #[error("invalid drive configuration: {0}")]
    InvalidDrive(String),

    /// Norm drift beyond the failure threshold during propagation.
    #[error("integrator failure at t = {time:e} s: norm drift {drift:e} after {steps} steps (dt = {step:e} s)")]
    IntegratorFailure { time: f64, drift: f64, steps: u64, step: f64 },

    /// A pulse program whose segment boundaries break the frame bookkeeping.
    #[error("compile error in segment {index} ({label}): {message}")]
    Compile { index: usize, label: String, message: String },

    /// Clifford group bookkeeping found no matching element.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// A fit could not be carried out at all (as opposed to a fit that ran
    /// but did not converge, which is reported inside the fit result).
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T, E = CcdError> = std::result::Result<T, E>;
