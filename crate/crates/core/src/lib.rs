//! Simulator and machine-learning toolkit for anisotropic bimolecular
//! reactive mixing.
//!
//! The crate has two halves. The first is a non-negative finite element
//! solver: a structured triangular mesh on the unit square, Galerkin
//! assembly of mass and anisotropic diffusion matrices, and a backward-Euler
//! time stepper that solves each step as a box-constrained quadratic program
//! so nodal concentrations stay within physical bounds. The second half
//! turns solver output into reduced-order models: mixing quantities of
//! interest, exponential scaling fits, feature-importance estimators,
//! k-means clustering, and RBF-kernel support-vector regression and
//! classification trained by an SMO dual solver.
//!
//! The [`pipeline`] module wires these together into parameter sweeps,
//! dataset construction, the train/evaluate protocol, and report export;
//! the `mixrom` binary exposes the same as CLI subcommands.

pub mod error;
pub mod feature_analysis;
pub mod mesh_fem;
pub mod physics;
pub mod pipeline;
pub mod qoi;
pub mod rom_ml;

pub use error::{Error, Result};
