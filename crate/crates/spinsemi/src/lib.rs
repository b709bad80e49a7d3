//! Quantum propagators of a spin-1/2 in an arbitrary time-dependent magnetic
//! field, computed three ways:
//!
//! * exact adaptive integration of the SU(2) coefficient equations,
//! * a semiclassical coherent-state construction in stereographic variables
//!   (which is exact for spin-1/2, the property this crate verifies),
//! * closed analytic forms for the constant-field and Landau-Zener models.
//!
//! Conventions: hbar = 1, field components in angular-frequency units, and
//! coherent states labeled by sphere angles with half-angle spinor phases.

pub mod analytic;
pub mod ensemble;
pub mod error;
pub mod exact;
pub mod field;
pub mod ode;
pub mod semiclassical;
pub mod sphere;

pub use error::{Error, Result};
pub use exact::{integrate_ab, matrix_element, Su2Propagator};
pub use field::{FieldSample, FieldSpec};
pub use num_complex::Complex64;
pub use ode::IntegratorConfig;
pub use semiclassical::{
    action_propagator, endpoint_propagator, solve_trajectory, ClassicalTrajectory,
};
pub use sphere::{overlap, SphereAngles, StereoPair};
