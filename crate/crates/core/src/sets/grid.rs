use alloc::format;
use alloc::vec::Vec;

use super::{check_input, require_member, ConstraintSet, Projection, WitnessSet};
use crate::error::{check_dim, Error, Result};
use crate::point::Point;
use crate::MEMBERSHIP_TOL;

/// Regular grid `{h z : z integer, lo_i <= h z_i <= hi_i}`. Finite, and
/// every point is isolated, so all tangent cones are `{0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    spacing: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Integer index range per axis.
    index_lo: Vec<i64>,
    index_hi: Vec<i64>,
}

impl GridSet {
    pub fn new(spacing: f64, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::Construction("grid must have positive dimension".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Construction(format!("grid spacing must be positive, got {spacing}")));
        }
        if lower.iter().chain(&upper).any(|b| !b.is_finite()) {
            return Err(Error::Construction("grid bounds must be finite".into()));
        }
        let index_lo: Vec<i64> = lower.iter().map(|lo| libm::ceil(lo / spacing) as i64).collect();
        let index_hi: Vec<i64> = upper.iter().map(|hi| libm::floor(hi / spacing) as i64).collect();
        if let Some(axis) = (0..lower.len()).find(|&i| index_lo[i] > index_hi[i]) {
            return Err(Error::Construction(format!(
                "empty grid: no multiple of {spacing} in [{}, {}] on axis {axis}",
                lower[axis], upper[axis]
            )));
        }
        Ok(GridSet { spacing, lower, upper, index_lo, index_hi })
    }

    /// Same bounds on every axis.
    pub fn uniform(dim: usize, spacing: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(spacing, alloc::vec![lo; dim], alloc::vec![hi; dim])
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.index_lo.iter().zip(&self.index_hi).map(|(lo, hi)| (hi - lo + 1) as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points in lexicographic order of their coordinates.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let dim = self.index_lo.len();
        let mut current: Option<Vec<i64>> = Some(self.index_lo.clone());
        core::iter::from_fn(move || {
            let z = current.take()?;
            let p = Point::from_vec_unchecked(z.iter().map(|&zi| self.spacing * zi as f64).collect());
            let mut next = z;
            let mut axis = dim;
            while axis > 0 {
                axis -= 1;
                if next[axis] < self.index_hi[axis] {
                    next[axis] += 1;
                    current = Some(next);
                    break;
                }
                next[axis] = self.index_lo[axis];
            }
            Some(p)
        })
    }

    /// Nearest admissible indices along one axis; two on an exact midpoint,
    /// lower one first.
    fn axis_candidates(&self, axis: usize, x: f64) -> ([i64; 2], usize) {
        let (lo, hi) = (self.index_lo[axis], self.index_hi[axis]);
        let t = x / self.spacing;
        let below = libm::floor(t) as i64;
        if below >= hi {
            return ([hi, hi], 1);
        }
        if below < lo {
            return ([lo, lo], 1);
        }
        let above = below + 1;
        let d_below = x - self.spacing * below as f64;
        let d_above = self.spacing * above as f64 - x;
        if d_below < d_above {
            ([below, below], 1)
        } else if d_above < d_below {
            ([above, above], 1)
        } else {
            ([below, above], 2)
        }
    }
}

impl ConstraintSet for GridSet {
    fn dim(&self) -> usize {
        self.index_lo.len()
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(i, &xi)| {
                let z = libm::round(xi / self.spacing);
                (xi - self.spacing * z).abs() <= tol
                    && z as i64 >= self.index_lo[i]
                    && z as i64 <= self.index_hi[i]
            })
    }

    /// Componentwise rounding with clamping. Exact half-spacing ties list
    /// both neighbours on every tied axis (Cartesian product).
    fn project_all(&self, x: &[f64]) -> Result<Projection> {
        check_input(self.dim(), x)?;
        let per_axis: Vec<([i64; 2], usize)> =
            x.iter().enumerate().map(|(i, &xi)| self.axis_candidates(i, xi)).collect();
        let mut out: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(x.len())];
        for (cands, count) in per_axis {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    cands[..count].iter().map(move |&z| {
                        let mut p = prefix.clone();
                        p.push(self.spacing * z as f64);
                        p
                    })
                })
                .collect();
        }
        Ok(Projection::exact(out.into_iter().map(Point::from_vec_unchecked).collect()))
    }

    /// Rounds ties toward negative infinity.
    fn project_one(&self, x: &[f64]) -> Result<Point> {
        check_input(self.dim(), x)?;
        Ok(Point::from_vec_unchecked(
            x.iter()
                .enumerate()
                .map(|(i, &xi)| self.spacing * self.axis_candidates(i, xi).0[0] as f64)
                .collect(),
        ))
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

    /// Isolated point: the normal cone is the whole space.
    fn limiting_normal_contains(&self, base: &[f64], v: &[f64], _tol: f64) -> Result<bool> {
        require_member(self, base, MEMBERSHIP_TOL)?;
        check_input(self.dim(), v)?;
        Ok(true)
    }

    fn witnesses(&self, around: &[f64]) -> Result<WitnessSet> {
        require_member(self, around, MEMBERSHIP_TOL)?;
        let points: Vec<Point> = self.points().collect();
        let strategy = format!("full grid enumeration ({} points)", points.len());
        Ok(WitnessSet { points, strategy })
    }
}
