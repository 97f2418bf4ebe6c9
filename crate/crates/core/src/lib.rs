//! Driven, damped Jaynes–Cummings model in the strong-coupling regime:
//! master-equation steady states and correlators, a four-level cascade
//! reduction, quantum-trajectory unravelings and Wigner functions.

pub mod correlators;
pub mod ensemble;
pub mod error;
pub mod hilbert;
pub mod liouvillian;
pub mod minimal;
pub mod ode;
pub mod sde;
pub mod signal;
pub mod sparse;
pub mod spectral;
pub mod trajectories;
pub mod validation;
pub mod wigner;

pub use error::{Error, Result};
pub use hilbert::{C64, DensityOp, FockTruncation, JcOperators, QOperator, StateVector, SystemParams};
