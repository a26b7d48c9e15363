//! Thin spherical shell toolkit: averaging operators between a shell
//! Q_ε = {1 ≤ |y| ≤ 1+ε} and the unit sphere, spectral solvers for
//! (stochastic) Navier–Stokes on both, and a harness that measures how
//! radial averages of shell solutions approach the sphere solution.

pub mod error;
pub mod harness;
pub mod noise;
pub mod quadrature;
pub mod shell;
pub mod sphere;
pub mod sphere_solver;
pub mod shell_solver;

pub use error::{Error, Result};
