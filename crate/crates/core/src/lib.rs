//! Natural superconvergence points of spline Galerkin approximations.

pub mod error;
pub mod fem2d_tri;
pub mod harness1d;
pub mod linalg;
pub mod polyalg;
pub mod problems;
pub mod quadrature;
pub mod solver1d;
pub mod spline1d;
pub mod tensor2d;

pub use error::{Error, Result};
