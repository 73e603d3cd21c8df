//! Executable reference monitor for the Android 6 runtime permission model.
//!
//! The state, actions and error codes live in [`model`]. [`exec`] is the
//! executable step function, [`axiomatic`] the declarative relation it is
//! checked against, and [`validity`] the state invariant.

pub mod axiomatic;
pub mod exec;
pub mod fixtures;
pub mod genfuzz;
pub mod io;
pub mod model;
pub mod propsuite;
pub mod queries;
pub mod traces;
pub mod validity;

pub use exec::step;
pub use model::*;
pub use validity::{check_validity, valid_state, ClauseId, ValidityReport};
