//! Truncated Fock-space toolkit for an atom coupled to a cavity field whose
//! end mirror is a quantum harmonic oscillator.

pub mod config;
pub mod error;
pub mod evolution;
pub mod hamiltonians;
pub mod layout;
pub mod matrix;
pub mod ops;
pub mod output;
pub mod params;
mod sparse;
pub mod spectral;
pub mod state;
pub mod transforms;
pub mod validate;

pub use error::{Error, Result};
pub use layout::{Slot, TensorLayout};
pub use matrix::{OperatorMatrix, C64};
pub use params::{EffVariant, SystemParams};
