//! Simulation and verification primitives for the one-dimensional hyperbolic
//! Anderson model `∂²u/∂t² = ∂²u/∂x² + u·Ẋ`, `u(0,·) = 1`, driven by Lévy
//! (or Gaussian) noise that is white in time and coloured in space.

pub mod analytics;
pub mod error;
pub mod noise;
pub mod kernels;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod statistics;

pub use error::{Error, Result};
