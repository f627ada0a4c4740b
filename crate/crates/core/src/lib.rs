//! Numerical laboratory for the kinetic eikonal equation.
//!
//! * [`velocity`]: bounded symmetric velocity sets and Maxwellians as
//!   weighted node sets.
//! * [`hamiltonian`]: the effective Hamiltonian defined by the BGK dispersion
//!   relation, its derivatives, the cell eigenfunction, the velocity
//!   corrector and the Legendre transform.
//! * [`hj`]: monotone Lax-Friedrichs solver for `phi_t + H(phi_x) = 0` and
//!   the Hopf-Lax oracle.
//! * [`kinetic`]: asymptotic-preserving solver for the scaled phase equation
//!   `phi_t + v phi_x = int M(v') (1 - exp((phi - phi')/eps)) dv'`.

pub mod error;
pub mod hamiltonian;
pub mod hj;
pub mod kinetic;
pub mod model_spec;
pub mod output;
pub mod quadrature;
mod root;
pub mod velocity;

pub use error::{Error, Result};
pub use hamiltonian::{HamiltonianModel, HamiltonianSource, LegendreTable};
pub use velocity::{VelocityKind, VelocityModel};
