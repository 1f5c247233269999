//! Dense state-vector engine for small multi-qubit systems.
//!
//! States are immutable values; every operation returns a new state.

mod state;
mod unitary;

pub use state::{
    concurrence, equal_up_to_global_phase, random_state, random_state_with, random_unitary_2,
    ProjectionOutcome, PureState, NORM_TOL, ZERO_PROBABILITY,
};
pub use unitary::{UnitaryOp, UNITARY_TOL};

/// End-to-end comparison tolerance.
pub const END_TO_END_TOL: f64 = 1e-10;
