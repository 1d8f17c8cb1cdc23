use alloc::format;
use alloc::vec::Vec;

use super::{check_input, mesh, require_member, ConstraintSet, Projection, WitnessSet};
use crate::error::{check_dim, Error, Result};
use crate::point::Point;
use crate::MEMBERSHIP_TOL;

/// Axis-aligned box `lo <= x <= hi`. Convex, so criticality and Fréchet
/// stationarity coincide on it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::Construction("box must have positive dimension".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                return Err(Error::Construction(format!("empty box on axis {i}: [{lo}, {hi}]")));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(alloc::vec![lo; dim], alloc::vec![hi; dim])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn clamp(&self, x: &[f64]) -> Point {
        Point::from_vec_unchecked(
            x.iter().zip(self.lower.iter().zip(&self.upper)).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect(),
        )
    }
}

impl ConstraintSet for BoxSet {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
    }

    fn project_all(&self, x: &[f64]) -> Result<Projection> {
        check_input(self.dim(), x)?;
        Ok(Projection::exact(alloc::vec![self.clamp(x)]))
    }

    fn project_one(&self, x: &[f64]) -> Result<Point> {
        check_input(self.dim(), x)?;
        Ok(self.clamp(x))
    }

    fn has_tangent_cone(&self) -> bool {
        true
    }

    /// Active lower bounds admit only nonnegative components, active upper
    /// bounds only nonpositive ones.
    fn tangent_project(&self, base: &[f64], v: &[f64]) -> Result<Point> {
        require_member(self, base, MEMBERSHIP_TOL)?;
        check_input(self.dim(), v)?;
        let out = (0..self.dim())
            .map(|i| {
                let at_lo = base[i] <= self.lower[i] + MEMBERSHIP_TOL;
                let at_hi = base[i] >= self.upper[i] - MEMBERSHIP_TOL;
                match (at_lo, at_hi) {
                    (true, true) => 0.0,
                    (true, false) => v[i].max(0.0),
                    (false, true) => v[i].min(0.0),
                    (false, false) => v[i],
                }
            })
            .collect();
        Ok(Point::from_vec_unchecked(out))
    }

    fn has_limiting_normals(&self) -> bool {
        true
    }

    fn limiting_normal_contains(&self, base: &[f64], v: &[f64], tol: f64) -> Result<bool> {
        require_member(self, base, MEMBERSHIP_TOL)?;
        check_input(self.dim(), v)?;
        Ok((0..self.dim()).all(|i| {
            let at_lo = base[i] <= self.lower[i] + MEMBERSHIP_TOL;
            let at_hi = base[i] >= self.upper[i] - MEMBERSHIP_TOL;
            match (at_lo, at_hi) {
                (true, true) => true,
                (true, false) => v[i] <= tol,
                (false, true) => v[i] >= -tol,
                (false, false) => v[i].abs() <= tol,
            }
        }))
    }

    /// Axis-parallel lines through `around` (within 10 of it, step 0.05)
    /// and, in up to 12 dimensions, the box corners.
    fn witnesses(&self, around: &[f64]) -> Result<WitnessSet> {
        require_member(self, around, MEMBERSHIP_TOL)?;
        let mut points = Vec::new();
        for axis in 0..self.dim() {
            let lo = self.lower[axis].max(around[axis] - 10.0);
            let hi = self.upper[axis].min(around[axis] + 10.0);
            for t in mesh(lo, hi, 0.05) {
                let mut y = around.to_vec();
                y[axis] = t;
                points.push(Point::from_vec_unchecked(y));
            }
        }
        let dim = self.dim();
        let bounded = self.lower.iter().chain(&self.upper).all(|b| b.is_finite());
        if bounded && dim <= 12 {
            for mask in 0u32..(1 << dim) {
                let corner =
                    (0..dim).map(|i| if mask & (1 << i) != 0 { self.upper[i] } else { self.lower[i] }).collect();
                points.push(Point::from_vec_unchecked(corner));
            }
        }
        Ok(WitnessSet { points, strategy: format!("axis lines step 0.05 plus corners ({dim} dims)") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamping_examples() {
        let b = BoxSet::uniform(2, 0.0, 1.0).unwrap();
        assert_eq!(b.project_one(&[2.0, -1.0]).unwrap().coords(), &[1.0, 0.0]);
        assert_eq!(b.project_one(&[0.25, 0.75]).unwrap().coords(), &[0.25, 0.75]);
        assert_eq!(b.project_one(&[0.5, 3.0]).unwrap().coords(), &[0.5, 1.0]);
        assert!(b.project_all(&[0.5, 3.0]).unwrap().is_singleton());
    }

    #[test]
    fn tangent_and_normal_at_a_corner() {
        let b = BoxSet::uniform(2, 0.0, 1.0).unwrap();
        let d = b.tangent_project(&[0.0, 1.0], &[-1.0, 2.0]).unwrap();
        assert_eq!(d.coords(), &[0.0, 0.0]);
        let d = b.tangent_project(&[0.0, 1.0], &[1.0, -2.0]).unwrap();
        assert_eq!(d.coords(), &[1.0, -2.0]);
        assert!(b.limiting_normal_contains(&[0.0, 1.0], &[-1.0, 2.0], 1e-9).unwrap());
        assert!(!b.limiting_normal_contains(&[0.5, 1.0], &[-1.0, 2.0], 1e-9).unwrap());
    }

    #[test]
    fn invalid_boxes() {
        assert!(BoxSet::uniform(2, 1.0, 0.0).is_err());
        assert!(BoxSet::new(alloc::vec![0.0], alloc::vec![]).is_err());
    }
}
