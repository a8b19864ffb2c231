//! Cavity field states that rotate a qubit with minimal error, the ancilla
//! channel that prepares them, and the error analysis around them.
//!
//! The field is a single mode truncated to `D` Fock levels and couples to a
//! two-level atom through the resonant Jaynes-Cummings interaction. States
//! live in [`fock`], the evolution blocks in [`jcm`], the optimal states in
//! [`optimal`], the recycling channel in [`recycler`] and gate errors in
//! [`gate`].

pub mod appendix;
pub mod error;
pub mod fock;
pub mod gate;
pub mod jcm;
pub mod linalg;
pub mod optimal;
pub mod qubit;
pub mod recycler;
pub mod runner;

pub use error::{Error, Result};
