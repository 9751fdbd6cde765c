//! Sparse-grid adaptive spectral Koopman solver for autonomous ODE systems.
//!
//! A local Koopman decomposition is built on a Smolyak grid of Chebyshev
//! extrema around the current state and evaluated in closed form; when the
//! trajectory leaves the trusted part of the neighbourhood the decomposition
//! is rebuilt around the new state. The [`pde`] module provides Fourier
//! semi-discretisations of four periodic PDEs to exercise the solver, and
//! [`rk4`] a fixed-step baseline.

// `!(a < b)` is used on purpose so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheb_basis;
pub mod error;
pub mod koopman;
mod linalg;
pub mod pde;
pub mod rk4;
pub mod solver;
pub mod sparse_grid;
pub mod system;

#[cfg(test)]
mod test_support;

pub use error::{Result, SaskError};
pub use faer::c64;
pub use koopman::{decompose, EigenMethod, KoopmanDecomposition, NeighborhoodBox};
pub use solver::{dense_output, solve, SolveTrace, SolverConfig};
pub use sparse_grid::{build_grid, Level, SparseGrid};
pub use system::SemiDiscreteSystem;
