//! Quantum Petri nets: safe Petri nets carrying local quantum annotations.
//!
//! The crate builds and validates nets ([`net`]), attaches channels to
//! transitions ([`annotation`]), certifies the drop condition and
//! obliviousness ([`checker`]), unfolds nets into branching processes
//! ([`unfolding`]), composes nets ([`compose`]) and reads probabilities off
//! the induced valuation ([`semantics`]).

pub mod algebra;
pub mod annotation;
pub mod checker;
pub mod compose;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod net;
pub mod outcome;
pub mod semantics;
pub mod unfolding;

pub use error::{Error, Result};
pub use outcome::CheckOutcome;
