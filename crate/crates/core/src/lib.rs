//! Finite element laboratory for elliptic homogenization with high contrast
//! in periodically perforated domains.
//!
//! The coefficient is `A^ε_δ(x) = Λ_δ(x/ε)² A(x/ε)` where `Λ_δ` is one on
//! the matrix phase and `δ ∈ [0, 1]` in the holes. The crate computes cell
//! correctors and homogenized tensors, solves Dirichlet and Neumann problems
//! on the perforated domain, and measures the quantities that control the
//! homogenization error: two-scale expansion errors, boundary layers,
//! nontangential maximal functions, Rellich ratios and Green's functions.

pub mod analysis;
pub mod bvp;
pub mod cell;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod study;

pub use error::{Error, Result};
