//! Stabilized finite element solver for incompressible flow on periodic boxes.
//!
//! The discretization uses divergence-conforming spline spaces, three residual-based
//! formulations (skew-symmetric Galerkin, static-subscale VMS, and a Galerkin/least-squares
//! method with dynamic divergence-free subscales) and generalized-alpha time stepping.

pub mod config;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod formulations;
pub mod linear_solver;
pub mod output;
pub mod simulation;
pub mod small_scales;
pub mod spline;
pub mod stabilization;
pub mod time_integrator;
pub mod verification;

pub use error::{Error, Result};
