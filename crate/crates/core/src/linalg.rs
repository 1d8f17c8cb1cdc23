//! Small dense linear algebra kernels on row-major `f64` buffers.
//!
//! Everything here is desk scale (dimensions in the tens), so the routines
//! favour exactness and simplicity over blocking or vectorization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(dist_sq(a, b))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `x + alpha * d`
pub fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `y = M x` for an `n x n` row-major matrix.
pub fn sym_matvec(m: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], x)).collect()
}

pub fn is_symmetric(m: &[f64], n: usize, tol: f64) -> bool {
    (0..n).all(|i| (0..i).all(|j| (m[i * n + j] - m[j * n + i]).abs() <= tol))
}

/// Deterministic start vector that is not orthogonal to any coordinate axis.
fn start_vector(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 * 0.618_033_988_749_895) % 1.0))
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Spectral norm of a symmetric matrix (largest eigenvalue magnitude) by
/// power iteration on `M^2`.
pub fn spectral_norm_power(m: &[f64], n: usize, tol: f64, max_iters: usize) -> Result<f64> {
    let mut v = start_vector(n);
    let mut prev = f64::NAN;
    for _ in 0..max_iters {
        let mv = sym_matvec(m, n, &v);
        let mmv = sym_matvec(m, n, &mv);
        // Rayleigh quotient of M^2 at unit v.
        let est = libm::sqrt(dot(&v, &mmv).max(0.0));
        let nrm = norm(&mmv);
        if nrm == 0.0 {
            // v lies in the kernel; the start vector has a component along
            // every eigenvector, so M is zero.
            return Ok(0.0);
        }
        if (est - prev).abs() <= tol * est.max(1.0) {
            return Ok(est);
        }
        prev = est;
        v = mmv.into_iter().map(|x| x / nrm).collect();
    }
    Err(Error::Numeric(format!("power iteration did not converge in {max_iters} iterations")))
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
pub fn symmetric_eigenvalues(m: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut a = m.to_vec();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s
    };
    let scale = norm_sq(m).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        if off(&a) <= 1e-30 * scale {
            let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
            ev.sort_by(f64::total_cmp);
            return Ok(ev);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::Numeric("Jacobi eigenvalue iteration did not converge".into()))
}

/// Solves `A x = b` for a symmetric positive definite `A` by Cholesky.
pub fn cholesky_solve(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Numeric("matrix is not positive definite".into()));
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    Ok(x)
}

/// Thin singular value decomposition `A = W V^T` of an `m x n` row-major
/// matrix with `m >= n`, where the columns of `W` are `sigma_j u_j`.
pub struct JacobiSvd {
    pub rows: usize,
    pub cols: usize,
    /// `m x n` row-major, column `j` is `sigma_j u_j`.
    pub scaled_left: Vec<f64>,
    /// `n x n` row-major, orthogonal.
    pub right: Vec<f64>,
    pub singular_values: Vec<f64>,
}

/// One-sided (Hestenes) Jacobi SVD. Pairs of columns are rotated until every
/// normalized inner product is below `tol`.
pub fn jacobi_svd(a: &[f64], m: usize, n: usize, tol: f64, max_sweeps: usize) -> Result<JacobiSvd> {
    assert!(m >= n, "jacobi_svd expects a tall or square matrix");
    let mut w = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut converged = false;
    for _sweep in 0..max_sweeps {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..m {
                    let wi = w[k * n + i];
                    let wj = w[k * n + j];
                    alpha += wi * wi;
                    beta += wj * wj;
                    gamma += wi * wj;
                }
                if gamma == 0.0 || gamma.abs() <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for k in 0..m {
                    let wi = w[k * n + i];
                    let wj = w[k * n + j];
                    w[k * n + i] = c * wi - s * wj;
                    w[k * n + j] = s * wi + c * wj;
                }
                for k in 0..n {
                    let vi = v[k * n + i];
                    let vj = v[k * n + j];
                    v[k * n + i] = c * vi - s * vj;
                    v[k * n + j] = s * vi + c * vj;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("Jacobi SVD did not converge in {max_sweeps} sweeps")));
    }
    let singular_values = (0..n)
        .map(|j| libm::sqrt((0..m).map(|k| w[k * n + j] * w[k * n + j]).sum::<f64>()))
        .collect();
    Ok(JacobiSvd { rows: m, cols: n, scaled_left: w, right: v, singular_values })
}

/// Projects `x` onto the orthogonal complement of the span of `rows`.
pub fn project_onto_nullspace(rows: &[&[f64]], x: &[f64]) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for r in rows {
        let mut q = r.to_vec();
        let r_norm = norm(r);
        // Two passes of modified Gram-Schmidt for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&q, b);
                q.iter_mut().zip(b).for_each(|(qi, bi)| *qi -= c * bi);
            }
        }
        let qn = norm(&q);
        if qn > 1e-10 * r_norm.max(f64::MIN_POSITIVE) {
            q.iter_mut().for_each(|v| *v /= qn);
            basis.push(q);
        }
    }
    let mut out = x.to_vec();
    for b in &basis {
        let c = dot(&out, b);
        out.iter_mut().zip(b).for_each(|(o, bi)| *o -= c * bi);
    }
    out
}
