//! Discrete Boltzmann equation for particles obeying Haldane (fractional
//! exclusion) statistics.
//!
//! * [`model`]: momentum lattices, admissible collisions, normality.
//! * [`kinetics`]: filling factor, collision operator, entropy production,
//!   H-functionals, moments and fluxes.
//! * [`equilibrium`]: Maxwellians and the equilibria they induce.
//! * [`dynamics`]: homogeneous time integration and planar x-marching.
//! * [`linearized`]: linearized collision operator and its spectrum.
//! * [`io`]: JSON model files and report serialization.

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod exact;
pub mod io;
pub mod kinetics;
pub mod linearized;
pub mod model;

pub use error::{Error, Result};
