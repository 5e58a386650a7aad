//! Finite element solvers for fourth- and sixth-order elliptic problems in
//! 2D, built by decoupling them into sequences of Poisson and Stokes solves.

pub mod assembly;
pub mod cases;
pub mod cli;
pub mod error;
pub mod export;
pub mod fespace;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod solvers;
pub mod verification;

pub use error::Error;
