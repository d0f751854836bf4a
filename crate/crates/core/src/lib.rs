//! Doubly-symmetric periodic orbits of the spatial Hill lunar problem with an
//! oblate secondary.
//!
//! The crate is organized bottom-up:
//!
//! * [`elements`]: Cartesian, orbital, Delaunay and Poincare-Delaunay variables;
//! * [`hansen`]: Hansen coefficients by spectral quadrature;
//! * [`model`]: the Hamiltonians, their split by powers of the small parameter,
//!   and the Cartesian vector field;
//! * [`averaging`]: the element series of the first-order perturbation, its
//!   single and double averages, and the first-order generating functions;
//! * [`integrator`]: adaptive Runge-Kutta propagation with angle unwrapping;
//! * [`shooting`]: the symmetry residual, Newton correction, verification and
//!   family continuation;
//! * [`cli`]: the `hill-orbits` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod cli;
pub mod elements;
pub mod error;
pub mod hansen;
pub mod integrator;
pub mod model;
pub mod shooting;

pub use elements::{CartesianState, Delaunay, OrbitalElements, PoincareDelaunay};
pub use error::{HillError, Result};
pub use model::HillParams;
pub use shooting::{OrbitRecord, SymmetryConfig, Unknowns};
