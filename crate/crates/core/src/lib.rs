//! Pseudo-bosons on truncated Fock spaces.
//!
//! A pseudo-boson pair is a pair of operators `a`, `b` with `[a, b] = 1` where
//! `b` need not be the adjoint of `a`. This crate builds finite sections of such
//! pairs, generates their biorthogonal eigenvector families, estimates the frame
//! operators that map one family onto the other, and checks the similarity to
//! ordinary bosons, coherent states and resolutions of the identity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherent;
pub mod error;
pub mod fock;
pub mod frames;
pub mod matfn;
pub mod models;
pub mod pbsystem;
pub mod tolerance;

pub use error::{Error, Result};
pub use fock::{build_ladder, tensor_lift, FockBasisIndex, ModeLayout, TruncatedOperator, C64};
pub use pbsystem::{build_system, BiorthogonalSystem, PseudoBosonPair};
pub use tolerance::Tolerances;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
