//! Closed constraint sets.
//!
//! Each set exposes membership, the full (possibly multivalued) Euclidean
//! projection, a deterministic representative of it, and where a closed form
//! exists, projection onto the tangent cone and membership in the limiting
//! normal cone. Missing oracles surface as [`Error::Capability`] so callers can
//! leave report fields empty instead of guessing.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::point::Point;

mod boxed;
mod finite;
mod grid;
mod rank;
mod sparse;

pub use boxed::BoxSet;
pub use finite::FinitePointSet;
pub use grid::GridSet;
pub use rank::RankBoundedSet;
pub use sparse::SparseSet;

/// Result of a projection onto a closed set.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Nearest points, all at the same distance from the input.
    pub points: Vec<Point>,
    /// `false` when the argmin may contain points not listed (for instance
    /// a continuum of minimizers).
    pub complete: bool,
}

impl Projection {
    pub(crate) fn exact(points: Vec<Point>) -> Self {
        Projection { points, complete: true }
    }

    pub fn is_singleton(&self) -> bool {
        self.complete && self.points.len() == 1
    }
}

/// Feasible points against which a quantitative certificate is checked.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessSet {
    pub points: Vec<Point>,
    /// Human readable description of how the witnesses were chosen.
    pub strategy: String,
}

/// Oracle bundle of a nonempty closed set `C` in `R^p`.
pub trait ConstraintSet: Send + Sync {
    fn dim(&self) -> usize;

    /// Membership with an absolute tolerance on coordinate residuals.
    fn contains(&self, x: &[f64], tol: f64) -> bool;

    /// Every nearest point of `C` to `x`.
    fn project_all(&self, x: &[f64]) -> Result<Projection>;

    /// Deterministic element of `project_all(x)`.
    fn project_one(&self, x: &[f64]) -> Result<Point>;

    fn has_tangent_cone(&self) -> bool {
        false
    }

    /// Euclidean projection of `v` onto the tangent cone `T_C(base)`.
    fn tangent_project(&self, _base: &[f64], _v: &[f64]) -> Result<Point> {
        Err(Error::Capability("tangent cone projection"))
    }

    fn has_limiting_normals(&self) -> bool {
        false
    }

    /// Whether `v` lies in the limiting normal cone `N_C(base)`.
    fn limiting_normal_contains(&self, _base: &[f64], _v: &[f64], _tol: f64) -> Result<bool> {
        Err(Error::Capability("limiting normal cone"))
    }

    /// Default witnesses for the quantitative certificate at `around`.
    fn witnesses(&self, _around: &[f64]) -> Result<WitnessSet> {
        Err(Error::Capability("witness enumeration"))
    }
}

impl<S: ConstraintSet + ?Sized> ConstraintSet for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        (**self).contains(x, tol)
    }
    fn project_all(&self, x: &[f64]) -> Result<Projection> {
        (**self).project_all(x)
    }
    fn project_one(&self, x: &[f64]) -> Result<Point> {
        (**self).project_one(x)
    }
    fn has_tangent_cone(&self) -> bool {
        (**self).has_tangent_cone()
    }
    fn tangent_project(&self, base: &[f64], v: &[f64]) -> Result<Point> {
        (**self).tangent_project(base, v)
    }
    fn has_limiting_normals(&self) -> bool {
        (**self).has_limiting_normals()
    }
    fn limiting_normal_contains(&self, base: &[f64], v: &[f64], tol: f64) -> Result<bool> {
        (**self).limiting_normal_contains(base, v, tol)
    }
    fn witnesses(&self, around: &[f64]) -> Result<WitnessSet> {
        (**self).witnesses(around)
    }
}

pub(crate) fn check_input(dim: usize, x: &[f64]) -> Result<()> {
    crate::error::check_dim(dim, x.len())?;
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(alloc::format!("projection input {x:?}")));
    }
    Ok(())
}

pub(crate) fn require_member<S: ConstraintSet + ?Sized>(set: &S, base: &[f64], tol: f64) -> Result<()> {
    check_input(set.dim(), base)?;
    if set.contains(base, tol) {
        Ok(())
    } else {
        Err(Error::Domain(alloc::format!("base point {base:?} is not in the set")))
    }
}

/// Evenly spaced values covering `[lo, hi]` with the given spacing; both
/// ends included.
pub(crate) fn mesh(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let steps = libm::floor((hi - lo) / spacing + 1e-9) as i64;
    let mut out: Vec<f64> = (0..=steps).map(|i| lo + spacing * i as f64).collect();
    if out.last().is_some_and(|last| hi - last > 1e-12) {
        out.push(hi);
    }
    out
}
