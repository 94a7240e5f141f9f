//! Simulation and stability certificates for the Korteweg-de Vries equation
//! with a delayed boundary feedback
//!
//! ```text
//! y_t + y_xxx + y_x + y y_x = 0,           x in (0, L)
//! y(0, t) = y(L, t) = 0
//! y_x(L, t) = alpha y_x(0, t) + beta y_x(0, t - h)
//! ```
//!
//! The delay is carried by a transport variable `z(rho, t) = y_x(0, t - rho h)`
//! on `rho in (0, 1)`, and the coupled system is advanced by an implicit
//! finite-difference step factored once per run.

pub mod analysis;
pub mod banded;
pub mod certificates;
pub mod config;
pub mod error;
pub mod lattice;
pub mod output;
pub mod run;
pub mod scheme;

pub use error::{Error, Result};
