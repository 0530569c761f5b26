//! Numerical workbench for the spin-s Temperley-Lieb quantum chain.
//!
//! Everything is built as dense complex matrices on `(C^{2s+1})^{⊗N}` (with an
//! auxiliary factor in front where needed) and checked against the scalar
//! Bethe-ansatz formulas:
//!
//! - [`model`]: parameters `(N, s, q, Q, θ)` and the scalar functions ω, ζ, g, f, F.
//! - [`operators`]: TL generator, Hamiltonian, R-matrix, crossing matrices, R±.
//! - [`transfer`]: monodromy and transfer matrices for the open and closed chains.
//! - [`bethe`]: eigenvalue ansatz, Bethe equations, energies, twist and shift.
//! - [`solver`]: multi-start Newton search for all Bethe solutions per sector.
//! - [`symmetry`]: quantum-group generators T± and degeneracy measurement.
//! - [`aba`]: Bethe vectors, off-shell action, scalar products and norms.
//! - [`report`]: table reproduction, verification suites and report output.

pub mod aba;
pub mod bethe;
mod cser;
pub mod dual;
pub mod error;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod report;
pub mod solver;
pub mod symmetry;
pub mod transfer;

pub use error::{Result, TlError};
pub use model::{ModelParams, QBranch, Spin, C64};
