//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A stereographic coordinate or a Hamiltonian denominator hit the
    /// coordinate singularity.
    #[error("coordinate pole: {0}")]
    Pole(&'static str),

    /// A `StereoPair` was asked to act as a real sphere point but
    /// `eta != conj(zeta)` beyond tolerance.
    #[error("stereo pair is not a real sphere point")]
    NotRealPoint,

    /// Tabulated field evaluated outside its sample range.
    #[error("time {t} outside tabulated range [{min}, {max}]")]
    OutOfRange { t: f64, min: f64, max: f64 },

    /// The adaptive integrator exceeded its step budget.
    #[error("integrator exceeded {0} steps")]
    StepLimit(usize),

    /// The adaptive integrator could not advance (step size underflow).
    #[error("integrator step size underflow at t = {0}")]
    StepUnderflow(f64),

    /// A label trajectory crossed cos(theta) = +-1 where the azimuth
    /// equation of motion is singular.
    #[error("label trajectory passes through a pole; azimuth undefined")]
    DegenerateLabel,

    /// Branch tracking of the action-route prefactor failed even at the
    /// maximum grid refinement.
    #[error("branch tracking unresolved at {0} grid points")]
    BranchTracking(usize),

    /// Invalid special-function or configuration parameter.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A power series hit its term cap before reaching tolerance.
    #[error("series did not converge within {0} terms")]
    Convergence(usize),

    /// Malformed textual input (field spec, angle pair, CSV file).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
