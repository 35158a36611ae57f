//! Radial laboratory for stable solutions of `-Δu = λ f(u)` on balls.

pub mod continuation;
pub mod error;
pub mod estimates;
pub mod grid;
pub mod io;
pub mod laplacian;
pub mod nonlinearity;
pub mod oracles;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod stability;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::{Grading, GridFunction, Origin, RadialGrid};
pub use nonlinearity::Nonlinearity;
pub use solver::{Problem, Solution};
