use alloc::format;
use alloc::vec::Vec;

use super::{check_input, ConstraintSet, Projection};
use crate::error::{Error, Result};
use crate::linalg::{self, JacobiSvd};
use crate::point::Point;

const MAX_SIDE: usize = 32;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_SWEEPS: usize = 100;

/// `m x n` matrices of rank at most `r`, flattened row-major into `R^{mn}`.
///
/// Only membership and projection (truncated SVD) are provided; tangent and
/// normal cone oracles report [`Error::Capability`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankBoundedSet {
    rows: usize,
    cols: usize,
    rank: usize,
}

struct Factorization {
    svd: JacobiSvd,
    transposed: bool,
    /// Column indices sorted by decreasing singular value, stable.
    order: Vec<usize>,
}

impl RankBoundedSet {
    pub fn new(rows: usize, cols: usize, rank: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > MAX_SIDE || cols > MAX_SIDE {
            return Err(Error::Construction(format!("matrix shape {rows}x{cols} outside 1..={MAX_SIDE}")));
        }
        if rank == 0 {
            return Err(Error::Construction("rank bound must be at least 1".into()));
        }
        Ok(RankBoundedSet { rows, cols, rank })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rank_bound(&self) -> usize {
        self.rank
    }

    fn factor(&self, x: &[f64]) -> Result<Factorization> {
        let (m, n) = (self.rows, self.cols);
        let (svd, transposed) = if m >= n {
            (linalg::jacobi_svd(x, m, n, JACOBI_TOL, JACOBI_SWEEPS)?, false)
        } else {
            let mut t = alloc::vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    t[j * m + i] = x[i * n + j];
                }
            }
            (linalg::jacobi_svd(&t, n, m, JACOBI_TOL, JACOBI_SWEEPS)?, true)
        };
        let mut order: Vec<usize> = (0..svd.cols).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        Ok(Factorization { svd, transposed, order })
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(self.rows * self.cols, x)?;
        let f = self.factor(x)?;
        Ok(f.order.iter().map(|&j| f.svd.singular_values[j]).collect())
    }

    fn truncate(&self, f: &Factorization) -> Vec<f64> {
        let svd = &f.svd;
        let (p, q) = (svd.rows, svd.cols);
        let mut out = alloc::vec![0.0; p * q];
        for &j in f.order.iter().take(self.rank) {
            for r in 0..p {
                let w = svd.scaled_left[r * q + j];
                if w == 0.0 {
                    continue;
                }
                for c in 0..q {
                    out[r * q + c] += w * svd.right[c * q + j];
                }
            }
        }
        if f.transposed {
            let mut t = alloc::vec![0.0; p * q];
            for r in 0..p {
                for c in 0..q {
                    t[c * p + r] = out[r * q + c];
                }
            }
            t
        } else {
            out
        }
    }
}

impl ConstraintSet for RankBoundedSet {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    /// Rank counted as singular values above `tol`.
    fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self.singular_values(x) {
            Ok(s) => s.iter().filter(|&&v| v > tol).count() <= self.rank,
            Err(_) => false,
        }
    }

    /// Singleton; flagged incomplete when the `r`-th and `(r+1)`-th singular
    /// values coincide and the minimizer is not unique.
    fn project_all(&self, x: &[f64]) -> Result<Projection> {
        check_input(self.dim(), x)?;
        let f = self.factor(x)?;
        let s: Vec<f64> = f.order.iter().map(|&j| f.svd.singular_values[j]).collect();
        let complete = self.rank >= s.len() || s[self.rank - 1] - s[self.rank] > JACOBI_TOL * s[0].max(1.0);
        let point = Point::new(self.truncate(&f))?;
        Ok(Projection { points: alloc::vec![point], complete })
    }

    /// Truncated SVD keeping the `r` largest singular values; ties are
    /// resolved by the order the Jacobi sweep leaves the columns in.
    fn project_one(&self, x: &[f64]) -> Result<Point> {
        check_input(self.dim(), x)?;
        let f = self.factor(x)?;
        Point::new(self.truncate(&f))
    }
}
