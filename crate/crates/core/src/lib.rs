//! Explicit ODE samplers for flow-matching generative models.
//!
//! The crate contains four explicit integrators (Euler, midpoint, RK4 and the
//! adaptive Dormand-Prince 5(4) pair), a small residual MLP trained with
//! conditional flow matching on 2D toy data, and the measurements used to compare
//! the samplers: convergence orders, stability regions, NFE/quality trade-offs,
//! Jacobian spectra along sampling paths and adaptive step-size traces.

pub mod analysis;
pub mod cfm;
pub mod cli;
pub mod data;
pub mod error;
pub mod nn;
pub mod numeric;
pub mod ode;

pub use error::{Error, Result};
