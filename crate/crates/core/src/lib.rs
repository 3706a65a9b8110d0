//! Numerics for the Stein-Weiss inequality with the fractional Poisson kernel
//! on the upper half-space: exponent bookkeeping, kernel quadrature, radial
//! profiles, the weighted operators V and W, extremal and Euler-Lagrange
//! solvers, and executable checks of the theory.

pub mod admissibility;
pub mod error;
pub mod kernel;
pub mod operators;
pub mod profiles;
pub mod quad;
pub mod solver;
pub mod verifier;
pub mod special;

pub use error::{Error, Result};
