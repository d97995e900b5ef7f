//! Solver suite for S-shaped utility maximization under a Value-at-Risk
//! constraint when the drift of the risky asset is an unobservable two-state
//! random variable.
//!
//! Three routes to the same problem:
//! - [`lagrange::ExactSolver`]: semi-closed quadrature solve built on the
//!   Bayesian filter, concavification, and a change of measure that reduces
//!   every expectation to a one-dimensional integral;
//! - [`mc`]: dual Monte Carlo simulation with gradient descent on the dual
//!   start and a multiplier-grid sweep;
//! - [`pinn`]: a physics-informed network trained on the dual HJB residual
//!   over (t, y, mu_hat, lambda).

// validation guards use `!(x > 0.0)` so NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod lagrange;
pub mod mc;
pub mod model;
pub mod pinn;
pub mod quad;
pub mod report;
pub mod utility;

pub use error::{QvarError, Result};
