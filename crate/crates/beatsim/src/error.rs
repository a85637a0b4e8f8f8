//! Error type shared across the simulator.

use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum SimError {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Adaptive quadrature hit its subdivision limit before reaching the
    /// requested absolute tolerance.
    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    QuadratureNonConvergence { requested: f64, achieved: f64 },

    /// A matrix claimed to be unitary is not, within tolerance.
    #[error("matrix is not unitary: max deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    /// A device failed structural validation; one message per violation.
    #[error("device validation failed:\n  {}", .0.join("\n  "))]
    InvalidDevice(Vec<String>),

    /// An input is structurally degenerate (e.g. an all-zero matrix where a
    /// normalizable one is required).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
