//! Finite-dimensional quantum state simulation built around a two-step
//! measurement model: a unitary *marking* interaction that entangles the
//! measured basis with a marker, followed by a *detection* step that samples
//! a definite marker value from its reduced state.
//!
//! Basis conventions used throughout: spin up `|↑⟩` and marker `|0⟩` are
//! the first computational basis vector, spin down `|↓⟩` and marker `|1⟩`
//! the second. In a compound layout the leftmost factor is the most
//! significant digit of the joint index.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod measurement;
pub mod nosignal;
pub mod report;
pub mod rng;
pub mod state;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
