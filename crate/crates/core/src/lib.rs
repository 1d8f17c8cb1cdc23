//! Projected and proximal gradient methods over closed, possibly nonconvex
//! sets, together with a diagnostics layer that tells Fréchet stationary
//! limit points apart from points that are merely critical.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the command line or threads lives in the companion `frechet`
//! crate.
//!
//! ## Layout
//!
//! * [`point`] and [`objective`]: ambient vectors, smooth objectives and the
//!   gradient validators.
//! * [`sets`]: constraint sets with exact (multivalued) projections, tangent
//!   cone projections and closed-form limiting normal tests.
//! * [`prox`]: proximity operators of lower semicontinuous penalties.
//! * [`solver`]: the projected and proximal gradient iterations.
//! * [`diagnostics`]: stationarity certificates for candidate limit points.
//! * [`genericity`]: Monte Carlo check that random linear perturbations
//!   remove critical points that are not Fréchet stationary.

#![no_std]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod genericity;
pub mod linalg;
pub mod objective;
pub mod point;
pub mod prox;
pub mod sets;
pub mod solver;

pub use error::{Error, Result};
pub use objective::{FnObjective, Objective, Quadratic};
pub use point::Point;
pub use prox::ProxOperator;
pub use sets::{ConstraintSet, Projection};
pub use solver::{SolveResult, SolverConfig, StopReason, Trace};

/// Default absolute tolerance used for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
