//! Sparse-grid stochastic gradient solvers for semilinear parabolic PDEs.
//!
//! The PDE solution is approximated through its backward SDE: the initial
//! value `Y_0` and the control `Z_{t_n}` are linear combinations of sparse
//! grid basis functions, fitted either by SGD on the terminal mismatch
//! (`sgd::solve_direct`) or by a Picard iteration whose inner problems are
//! linear-quadratic (`sgd::solve_picard`).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod geometry;
pub mod harness;
pub mod models;
pub mod parametrization;
pub mod reference;
pub mod sgd;
pub mod simulation;
pub mod sparse_grid;

pub use geometry::{DomainBox, TimeGrid};
pub use models::{build_model, Model};
pub use parametrization::{Coefficients, SpaceLayout};
pub use sparse_grid::{Family, SparseGridSpace};
