//! Checkerboard domain decomposition for the 2D Helmholtz equation.
//!
//! The interface system `(I - S) g = b` over directed interface traces is
//! solved with GMRES, preconditioned either by a symmetric Gauss-Seidel
//! sweep over diagonal groups of subdomains or by its block Jacobi variant,
//! which splits each sweep into concurrent partial sweeps.

pub mod banded;
pub mod cli;
pub mod discretization;
pub mod driver;
pub mod error;
pub mod indexing;
pub mod interface;
pub mod krylov;
pub mod preconditioner;

pub use error::{Error, Result};
