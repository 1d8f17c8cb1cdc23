use alloc::format;
use alloc::vec::Vec;

use super::{check_input, require_member, ConstraintSet, Projection, WitnessSet};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::point::Point;
use crate::MEMBERSHIP_TOL;

/// An explicit nonempty list of points. Projections are computed by
/// exhaustive search, so they are exact including ties.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePointSet {
    points: Vec<Point>,
}

impl FinitePointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::Construction("finite set must be nonempty".into()))?;
        let dim = first.dim();
        for p in &points {
            check_dim(dim, p.dim())?;
        }
        let mut unique: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if !unique.contains(&p) {
                unique.push(p);
            }
        }
        Ok(FinitePointSet { points: unique })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
}

impl ConstraintSet for FinitePointSet {
    fn dim(&self) -> usize {
        self.points[0].dim()
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && self.points.iter().any(|p| linalg::max_abs_diff(p, x) <= tol)
    }

    /// Every listed point whose distance to `x` equals the minimum within
    /// a relative `1e-12`.
    fn project_all(&self, x: &[f64]) -> Result<Projection> {
        check_input(self.dim(), x)?;
        let d: Vec<f64> = self.points.iter().map(|p| linalg::dist_sq(p, x)).collect();
        let best = d.iter().copied().fold(f64::INFINITY, f64::min);
        let cutoff = best * (1.0 + 2e-12);
        let points = self.points.iter().zip(&d).filter(|(_, &di)| di <= cutoff).map(|(p, _)| p.clone()).collect();
        Ok(Projection::exact(points))
    }

    /// First nearest point in list order.
    fn project_one(&self, x: &[f64]) -> Result<Point> {
        Ok(self.project_all(x)?.points.swap_remove(0))
    }

    fn has_tangent_cone(&self) -> bool {
        true
    }

    fn tangent_project(&self, base: &[f64], v: &[f64]) -> Result<Point> {
        require_member(self, base, MEMBERSHIP_TOL)?;
        check_input(self.dim(), v)?;
        Ok(Point::zeros(self.dim()))
    }

    fn has_limiting_normals(&self) -> bool {
        true
    }

    fn limiting_normal_contains(&self, base: &[f64], v: &[f64], _tol: f64) -> Result<bool> {
        require_member(self, base, MEMBERSHIP_TOL)?;
        check_input(self.dim(), v)?;
        Ok(true)
    }

    fn witnesses(&self, around: &[f64]) -> Result<WitnessSet> {
        require_member(self, around, MEMBERSHIP_TOL)?;
        Ok(WitnessSet {
            points: self.points.clone(),
            strategy: format!("full enumeration ({} points)", self.points.len()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn set() -> FinitePointSet {
        let pts = [[0.0, 0.0], [2.0, 0.0], [1.0, 3.0], [2.0, 0.0]];
        FinitePointSet::new(pts.iter().map(|p| Point::from_slice(p).unwrap()).collect()).unwrap()
    }

    #[test]
    fn duplicates_are_dropped() {
        assert_eq!(set().points().len(), 3);
    }

    #[test]
    fn ties_are_enumerated_in_list_order() {
        let s = set();
        let p = s.project_all(&[1.0, 0.0]).unwrap();
        assert_eq!(p.points.len(), 2);
        assert_eq!(p.points[0].coords(), &[0.0, 0.0]);
        assert_eq!(s.project_one(&[1.0, 0.0]).unwrap().coords(), &[0.0, 0.0]);
        assert!(s.project_all(&[1.0, 2.0]).unwrap().is_singleton());
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(FinitePointSet::new(vec![]).is_err());
        let ragged = vec![Point::from_slice(&[0.0]).unwrap(), Point::from_slice(&[0.0, 1.0]).unwrap()];
        assert!(FinitePointSet::new(ragged).is_err());
    }
}
