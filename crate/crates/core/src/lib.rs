//! Simulation of repeat-until-success distributed CZ gates.
//!
//! * [`qcore`]: dense state vectors, gates, projections, concurrence.
//! * [`rusgate`]: photon-pair measurement bases, encoding, correction tables and the
//!   repeat-until-success loop.
//! * [`optics`]: Fock-space simulation of the beam-splitter and Bell-multiport apparatuses
//!   with photon loss.
//! * [`graphstate`]: graph states with local Clifford frames, Pauli measurements,
//!   failure repair and vertical bonding, checked against a state-vector oracle.
//! * [`growth`]: exact-rational overhead cost model and Monte Carlo growth simulations.
//! * [`verify`]: equivalence suites shared by the CLI and the tests.

pub mod error;
pub mod graphstate;
pub mod growth;
pub mod optics;
pub mod qcore;
pub mod rusgate;
pub mod verify;

pub use error::{Error, Result};
