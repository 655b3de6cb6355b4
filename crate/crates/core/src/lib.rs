//! Numerical toolkit for quasilinear isotropic operators on weighted
//! intervals and radial models.
//!
//! The crate builds one-dimensional comparison profiles, evolves parabolic
//! problems with monotone explicit schemes, computes first eigenvalues by
//! shooting, and turns comparison inequalities into numerical checks with
//! explicit tolerances.

pub mod comparison;
pub mod eigen;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod operators;
pub mod pde;
pub mod spline;
pub mod verify;

pub use error::{Error, Result};
