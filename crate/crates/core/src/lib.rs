//! Numerical laboratory for the semilinear heat equation
//! `u_t = Δu + |u|^{p-1}u` and its radial steady states.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod doubling;
pub mod emden_fowler;
pub mod error;
pub mod exponents;
pub mod intersections;
pub mod ode;
pub mod parabolic;
pub mod radial_ode;
pub mod supersolution;

pub use error::{Error, Result};
