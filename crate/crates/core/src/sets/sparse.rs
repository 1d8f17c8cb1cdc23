use alloc::format;
use alloc::vec::Vec;

use super::{check_input, mesh, require_member, ConstraintSet, Projection, WitnessSet};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::MEMBERSHIP_TOL;

/// Enumerating more tie resolutions than this returns the representative
/// only, flagged incomplete.
const MAX_TIE_RESOLUTIONS: usize = 10_000;

/// Vectors of `R^p` with at most `k` nonzero coordinates: a finite union of
/// coordinate subspaces, closed but not Clarke regular at points with fewer
/// than `k` nonzeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseSet {
    dim: usize,
    k: usize,
}

impl SparseSet {
    pub fn new(dim: usize, k: usize) -> Result<Self> {
        if dim == 0 || k == 0 || k > dim {
            return Err(Error::Construction(format!("sparse set needs 1 <= k <= p, got p={dim}, k={k}")));
        }
        Ok(SparseSet { dim, k })
    }

    pub fn sparsity(&self) -> usize {
        self.k
    }

    fn support(&self, x: &[f64], tol: f64) -> Vec<usize> {
        (0..self.dim).filter(|&i| x[i].abs() > tol).collect()
    }

    /// Indices sorted by decreasing magnitude, ties by increasing index.
    fn magnitude_order(x: &[f64], indices: impl Iterator<Item = usize>) -> Vec<usize> {
        let mut idx: Vec<usize> = indices.collect();
        idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
        idx
    }

    fn keep(x: &[f64], support: &[usize]) -> Point {
        let mut out = alloc::vec![0.0; x.len()];
        for &i in support {
            out[i] = x[i];
        }
        Point::from_vec_unchecked(out)
    }
}

/// All `r`-subsets of `pool` in lexicographic order, or `None` past `limit`.
fn combinations(pool: &[usize], r: usize, limit: usize) -> Option<Vec<Vec<usize>>> {
    let n = pool.len();
    if r > n {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        if out.len() >= limit {
            return None;
        }
        out.push(idx.iter().map(|&i| pool[i]).collect());
        // Rightmost slot that can still advance.
        let mut i = r;
        let pos = loop {
            if i == 0 {
                return Some(out);
            }
            i -= 1;
            if idx[i] != i + n - r {
                break i;
            }
        };
        idx[pos] += 1;
        for j in (pos + 1)..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

impl ConstraintSet for SparseSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && x.iter().filter(|c| c.abs() > tol).count() <= self.k
    }

    /// Hard thresholding. When the `k`-th and `(k+1)`-th largest magnitudes
    /// tie, every way of breaking the tie is listed, lexicographically
    /// smallest support first.
    fn project_all(&self, x: &[f64]) -> Result<Projection> {
        check_input(self.dim, x)?;
        let order = Self::magnitude_order(x, 0..self.dim);
        let kth = x[order[self.k - 1]].abs();
        if kth == 0.0 || self.k == self.dim {
            return Ok(Projection::exact(alloc::vec![Self::keep(x, &order[..self.k])]));
        }
        let forced: Vec<usize> = order.iter().copied().filter(|&i| x[i].abs() > kth).collect();
        let mut tied: Vec<usize> = order.iter().copied().filter(|&i| x[i].abs() == kth).collect();
        tied.sort_unstable();
        let need = self.k - forced.len();
        match combinations(&tied, need, MAX_TIE_RESOLUTIONS) {
            Some(choices) => {
                let points = choices
                    .into_iter()
                    .map(|choice| {
                        let mut support = forced.clone();
                        support.extend(choice);
                        Self::keep(x, &support)
                    })
                    .collect();
                Ok(Projection::exact(points))
            }
            None => Ok(Projection { points: alloc::vec![self.project_one(x)?], complete: false }),
        }
    }

    fn project_one(&self, x: &[f64]) -> Result<Point> {
        check_input(self.dim, x)?;
        let order = Self::magnitude_order(x, 0..self.dim);
        Ok(Self::keep(x, &order[..self.k]))
    }

    fn has_tangent_cone(&self) -> bool {
        true
    }

    /// `T_C(x)` is the union of the `k`-dimensional coordinate subspaces
    /// containing the support `J` of `x`. The projection keeps `v` on `J`
    /// plus its `k - |J|` largest off-support coordinates.
    fn tangent_project(&self, base: &[f64], v: &[f64]) -> Result<Point> {
        require_member(self, base, MEMBERSHIP_TOL)?;
        check_input(self.dim, v)?;
        let support = self.support(base, MEMBERSHIP_TOL);
        let free = self.k - support.len();
        let off = Self::magnitude_order(v, (0..self.dim).filter(|i| !support.contains(i)));
        let mut keep = support;
        keep.extend(off.into_iter().take(free));
        Ok(Self::keep(v, &keep))
    }

    fn has_limiting_normals(&self) -> bool {
        true
    }

    /// `v` is a limiting normal at `x` with support `J` iff `v` vanishes on
    /// `J` and has at most `p - k` nonzero coordinates, i.e. some
    /// `k`-subset containing `J` avoids the support of `v`.
    fn limiting_normal_contains(&self, base: &[f64], v: &[f64], tol: f64) -> Result<bool> {
        require_member(self, base, MEMBERSHIP_TOL)?;
        check_input(self.dim, v)?;
        let support = self.support(base, MEMBERSHIP_TOL);
        if support.iter().any(|&i| v[i].abs() > tol) {
            return Ok(false);
        }
        let nnz = v.iter().filter(|c| c.abs() > tol).count();
        Ok(nnz <= self.dim - self.k)
    }

    /// Every coordinate axis sampled on `[-10, 10]` at spacing 0.05, plus
    /// the lines through `around` along each axis that keep it feasible.
    fn witnesses(&self, around: &[f64]) -> Result<WitnessSet> {
        require_member(self, around, MEMBERSHIP_TOL)?;
        let ts = mesh(-10.0, 10.0, 0.05);
        let support = self.support(around, MEMBERSHIP_TOL);
        let mut points = Vec::new();
        for axis in 0..self.dim {
            for &t in &ts {
                let mut y = alloc::vec![0.0; self.dim];
                y[axis] = t;
                points.push(Point::from_vec_unchecked(y));
            }
            if support.contains(&axis) || support.len() < self.k {
                for &t in &ts {
                    let mut y = around.to_vec();
                    y[axis] += t;
                    points.push(Point::from_vec_unchecked(y));
                }
            }
        }
        Ok(WitnessSet {
            points,
            strategy: format!("axis mesh [-10,10] step 0.05 ({} dims, k={})", self.dim, self.k),
        })
    }
}
