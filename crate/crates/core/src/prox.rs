//! Proximity operators of lower semicontinuous extended-real penalties.
//!
//! `prox_{s g}(x) = argmin_y s g(y) + 1/2 ||y - x||^2`. The solvers call the
//! scaled form with `s = gamma`. Every operator carries a constant `delta`
//! in `(0, 1]` such that `g + (1 - delta)/2 ||.||^2` is bounded below, which
//! makes the prox nonempty, locally bounded and upper semicontinuous.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::point::Point;
use crate::sets::{check_input, ConstraintSet, Projection};
use crate::MEMBERSHIP_TOL;

const MAX_TIE_RESOLUTIONS: usize = 10_000;

pub trait ProxOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `g(x)`, possibly `f64::INFINITY`.
    fn value(&self, x: &[f64]) -> f64;

    /// Every minimizer of `scale * g(y) + 1/2 ||y - x||^2`.
    fn prox_all(&self, x: &[f64], scale: f64) -> Result<Projection>;

    /// Deterministic element of [`ProxOperator::prox_all`].
    fn prox_one(&self, x: &[f64], scale: f64) -> Result<Point>;

    fn delta(&self) -> f64;

    /// `true` when bounded-belowness is known analytically.
    fn certified_bounded_below(&self) -> bool {
        false
    }

    /// Constraint set when `g` is an indicator; lets the solver track
    /// tangent cone residuals.
    fn as_constraint_set(&self) -> Option<&dyn ConstraintSet> {
        None
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale > 0.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("prox scale must be positive, got {scale}")))
    }
}

/// Indicator `delta_C`: zero on `C`, `+inf` elsewhere. Its prox is the
/// projection onto `C` for every scale.
#[derive(Debug, Clone)]
pub struct Indicator<S> {
    set: S,
}

impl<S: ConstraintSet> Indicator<S> {
    pub fn new(set: S) -> Self {
        Indicator { set }
    }

    pub fn set(&self) -> &S {
        &self.set
    }
}

impl<S: ConstraintSet> ProxOperator for Indicator<S> {
    fn dim(&self) -> usize {
        self.set.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        if self.set.contains(x, MEMBERSHIP_TOL) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox_all(&self, x: &[f64], scale: f64) -> Result<Projection> {
        check_scale(scale)?;
        self.set.project_all(x)
    }
    fn prox_one(&self, x: &[f64], scale: f64) -> Result<Point> {
        check_scale(scale)?;
        self.set.project_one(x)
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn certified_bounded_below(&self) -> bool {
        true
    }
    fn as_constraint_set(&self) -> Option<&dyn ConstraintSet> {
        Some(&self.set)
    }
}

/// `lambda ||x||_0`. Separable hard thresholding at `sqrt(2 lambda s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct L0Penalty {
    dim: usize,
    lambda: f64,
}

impl L0Penalty {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Construction("l0 penalty needs positive dimension".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Construction(format!("l0 weight must be positive, got {lambda}")));
        }
        Ok(L0Penalty { dim, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn threshold(&self, scale: f64) -> f64 {
        libm::sqrt(2.0 * self.lambda * scale)
    }

    /// Per coordinate: keep (`Some(true)`), zero (`Some(false)`) or tie.
    fn decisions(&self, x: &[f64], scale: f64) -> Vec<Option<bool>> {
        let cost = self.lambda * scale;
        x.iter()
            .map(|&xi| {
                let zeroing = 0.5 * xi * xi;
                if xi == 0.0 || zeroing < cost {
                    Some(false)
                } else if zeroing > cost {
                    Some(true)
                } else {
                    None
                }
            })
            .collect()
    }
}

impl ProxOperator for L0Penalty {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().filter(|c| **c != 0.0).count() as f64
    }
    fn prox_all(&self, x: &[f64], scale: f64) -> Result<Projection> {
        check_input(self.dim, x)?;
        check_scale(scale)?;
        let decisions = self.decisions(x, scale);
        let ties = decisions.iter().filter(|d| d.is_none()).count();
        // 2^ties resolutions.
        if ties >= usize::BITS as usize || (1usize << ties) > MAX_TIE_RESOLUTIONS {
            return Ok(Projection { points: alloc::vec![self.prox_one(x, scale)?], complete: false });
        }
        let mut out: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(self.dim)];
        for (xi, d) in x.iter().zip(&decisions) {
            let options: &[f64] = match d {
                Some(true) => &[1.0],
                Some(false) => &[0.0],
                None => &[0.0, 1.0],
            };
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |keep| {
                        let mut p = prefix.clone();
                        p.push(keep * xi);
                        p
                    })
                })
                .collect();
        }
        Ok(Projection { points: out.into_iter().map(Point::from_vec_unchecked).collect(), complete: true })
    }
    /// Zeroes tied coordinates.
    fn prox_one(&self, x: &[f64], scale: f64) -> Result<Point> {
        check_input(self.dim, x)?;
        check_scale(scale)?;
        let out = x
            .iter()
            .zip(self.decisions(x, scale))
            .map(|(xi, d)| if d == Some(true) { *xi } else { 0.0 })
            .collect();
        Ok(Point::from_vec_unchecked(out))
    }
    fn delta(&self) -> f64 {
        1.0
    }
    fn certified_bounded_below(&self) -> bool {
        true
    }
}

/// `1/2 x^T Q x + <b, x>` with symmetric positive semidefinite `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPenalty {
    dim: usize,
    q: Vec<f64>,
    b: Vec<f64>,
    delta: f64,
}

impl QuadraticPenalty {
    pub fn new(q: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let dim = b.len();
        if dim == 0 {
            return Err(Error::Construction("quadratic penalty needs positive dimension".into()));
        }
        check_dim(dim * dim, q.len())?;
        if q.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic penalty coefficients".into()));
        }
        if !linalg::is_symmetric(&q, dim, 1e-12) {
            return Err(Error::Construction("Q must be symmetric".into()));
        }
        let eig = linalg::symmetric_eigenvalues(&q, dim)?;
        let scale = eig.iter().fold(1.0_f64, |a, e| a.max(e.abs()));
        if eig[0] < -1e-12 * scale {
            return Err(Error::Construction(format!("Q must be positive semidefinite, smallest eigenvalue {}", eig[0])));
        }
        // With a kernel and a linear term, g itself can be unbounded below;
        // any delta < 1 then leaves a coercive quadratic.
        let delta = if eig[0] > 1e-12 * scale || b.iter().all(|v| *v == 0.0) { 1.0 } else { 0.5 };
        Ok(QuadraticPenalty { dim, q, b, delta })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(alloc::vec![0.0; dim * dim], alloc::vec![0.0; dim])
    }
}

impl ProxOperator for QuadraticPenalty {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        let qx = linalg::sym_matvec(&self.q, self.dim, x);
        0.5 * linalg::dot(x, &qx) + linalg::dot(&self.b, x)
    }
    fn prox_all(&self, x: &[f64], scale: f64) -> Result<Projection> {
        Ok(Projection { points: alloc::vec![self.prox_one(x, scale)?], complete: true })
    }
    /// Solves `(I + s Q) y = x - s b` by Cholesky.
    fn prox_one(&self, x: &[f64], scale: f64) -> Result<Point> {
        check_input(self.dim, x)?;
        check_scale(scale)?;
        let n = self.dim;
        let mut a: Vec<f64> = self.q.iter().map(|v| scale * v).collect();
        for i in 0..n {
            a[i * n + i] += 1.0;
        }
        let rhs = linalg::axpy(x, -scale, &self.b);
        Point::new(linalg::cholesky_solve(&a, n, &rhs)?)
    }
    fn delta(&self) -> f64 {
        self.delta
    }
    fn certified_bounded_below(&self) -> bool {
        true
    }
}

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type ProxFn = Box<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// User-supplied penalty. Only a single prox selection is available and
/// `delta` must be declared.
pub struct FnProx {
    dim: usize,
    value: ValueFn,
    prox: ProxFn,
    delta: f64,
}

impl FnProx {
    pub fn new<V, P>(dim: usize, delta: f64, value: V, prox: P) -> Result<Self>
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        P: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::Construction("penalty needs positive dimension".into()));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Construction(format!("delta must lie in (0, 1], got {delta}")));
        }
        Ok(FnProx { dim, value: Box::new(value), prox: Box::new(prox), delta })
    }
}

impl ProxOperator for FnProx {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn prox_all(&self, x: &[f64], scale: f64) -> Result<Projection> {
        Ok(Projection { points: alloc::vec![self.prox_one(x, scale)?], complete: false })
    }
    fn prox_one(&self, x: &[f64], scale: f64) -> Result<Point> {
        check_input(self.dim, x)?;
        check_scale(scale)?;
        let y = (self.prox)(x, scale);
        check_dim(self.dim, y.len())?;
        Point::new(y)
    }
    fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellPosedness {
    pub ok: bool,
    /// Point of lowest `g + (1 - delta)/2 ||.||^2` found when the probe
    /// detects a downward trend.
    pub witness: Option<Point>,
    /// `false` when the answer comes from the operator's analytic
    /// certificate rather than from probing.
    pub probed: bool,
}

/// Screens whether `g + (1 - delta)/2 ||.||^2` is bounded below.
///
/// Built-in operators are certified analytically and skip the probe. For
/// others, `probes` random directions are evaluated on radii `2^0 .. 2^20`;
/// a strictly decreasing minimum over the outer half of the radii that has
/// dropped by more than the largest radius is reported as unbounded. This is
/// a heuristic screen, not a proof.
pub fn check_prox_wellposed(p: &dyn ProxOperator, probes: usize, seed: u64) -> Result<WellPosedness> {
    if probes == 0 {
        return Err(Error::Precondition("at least one probe direction is required".into()));
    }
    if p.certified_bounded_below() {
        return Ok(WellPosedness { ok: true, witness: None, probed: false });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = p.dim();
    let weight = 0.5 * (1.0 - p.delta());
    let directions: Vec<Vec<f64>> = (0..probes)
        .map(|_| loop {
            let d: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let n = linalg::norm(&d);
            if n > 1e-3 {
                break d.into_iter().map(|v| v / n).collect();
            }
        })
        .collect();
    let radii: Vec<f64> = (0..=20).map(|e| libm::ldexp(1.0, e)).collect();
    let mut minima: Vec<(f64, Vec<f64>)> = Vec::with_capacity(radii.len());
    for &r in &radii {
        let mut best = (f64::INFINITY, Vec::new());
        for d in &directions {
            let x = linalg::scale(d, r);
            let h = p.value(&x) + weight * r * r;
            if h < best.0 || best.1.is_empty() {
                best = (h, x);
            }
        }
        minima.push(best);
    }
    let half = minima.len() / 2;
    let tail = &minima[half..];
    let decreasing = tail.windows(2).all(|w| w[1].0 < w[0].0);
    let last = &minima[minima.len() - 1];
    let dropped = last.0 < minima[0].0 - radii[radii.len() - 1];
    if decreasing && dropped {
        let witness = Point::new(last.1.clone()).ok();
        Ok(WellPosedness { ok: false, witness, probed: true })
    } else {
        Ok(WellPosedness { ok: true, witness: None, probed: true })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{BoxSet, SparseSet};
    use alloc::vec;

    fn coords(p: &Projection) -> Vec<Vec<f64>> {
        p.points.iter().map(|q| q.coords().to_vec()).collect()
    }

    #[test]
    fn indicator_examples() {
        let sparse = Indicator::new(SparseSet::new(2, 1).unwrap());
        assert_eq!(coords(&sparse.prox_all(&[1.0, -1.0], 1.0).unwrap()), vec![vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert_eq!(coords(&sparse.prox_all(&[0.0, 4.0], 1.0).unwrap()), vec![vec![0.0, 4.0]]);
        assert_eq!(sparse.value(&[0.0, 4.0]), 0.0);
        assert_eq!(sparse.value(&[1.0, 4.0]), f64::INFINITY);
        let bx = Indicator::new(BoxSet::uniform(2, 0.0, 1.0).unwrap());
        assert_eq!(coords(&bx.prox_all(&[2.0, 2.0], 0.3).unwrap()), vec![vec![1.0, 1.0]]);
    }

    #[test]
    fn l0_examples() {
        let g = L0Penalty::new(2, 0.5).unwrap();
        assert_eq!(g.threshold(1.0), 1.0);
        assert_eq!(coords(&g.prox_all(&[2.0, 0.5], 1.0).unwrap()), vec![vec![2.0, 0.0]]);
        let tie = g.prox_all(&[1.0, 3.0], 1.0).unwrap();
        assert_eq!(coords(&tie), vec![vec![0.0, 3.0], vec![1.0, 3.0]]);
        assert_eq!(g.prox_one(&[1.0, 3.0], 1.0).unwrap().coords(), &[0.0, 3.0]);
        assert_eq!(coords(&g.prox_all(&[0.0, 0.0], 1.0).unwrap()), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn l0_scaled_threshold() {
        // sqrt(2 * 0.05 * 0.5) ~ 0.2236
        let g = L0Penalty::new(2, 0.05).unwrap();
        assert_eq!(g.prox_one(&[1.0, 0.2], 0.5).unwrap().coords(), &[1.0, 0.0]);
        assert_eq!(g.prox_one(&[1.0, 0.23], 0.5).unwrap().coords(), &[1.0, 0.23]);
    }

    #[test]
    fn quadratic_examples() {
        let zero = QuadraticPenalty::zero(2).unwrap();
        assert_eq!(zero.prox_one(&[3.0, -1.0], 1.0).unwrap().coords(), &[3.0, -1.0]);
        let id = QuadraticPenalty::new(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let y = id.prox_one(&[2.0, 4.0], 1.0).unwrap();
        assert!(linalg::max_abs_diff(&y, &[1.0, 2.0]) < 1e-15);
        let diag = QuadraticPenalty::new(vec![3.0, 0.0, 0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let y = diag.prox_one(&[4.0, 7.0], 1.0).unwrap();
        assert!(linalg::max_abs_diff(&y, &[1.0, 7.0]) < 1e-15);
        assert!(matches!(
            QuadraticPenalty::new(vec![1.0, 2.0, 0.0, 1.0], vec![0.0, 0.0]),
            Err(Error::Construction(_))
        ));
        assert!(QuadraticPenalty::new(vec![-1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn quadratic_delta_from_spectrum() {
        assert_eq!(QuadraticPenalty::zero(2).unwrap().delta(), 1.0);
        let linear = QuadraticPenalty::new(vec![0.0; 4], vec![1.0, 0.0]).unwrap();
        assert!(linear.delta() < 1.0);
        let pd = QuadraticPenalty::new(vec![2.0, 0.0, 0.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(pd.delta(), 1.0);
    }

    #[test]
    fn wellposedness_screen() {
        let ind = Indicator::new(SparseSet::new(2, 1).unwrap());
        assert!(check_prox_wellposed(&ind, 4, 1).unwrap().ok);
        let l0 = L0Penalty::new(3, 1.0).unwrap();
        assert!(check_prox_wellposed(&l0, 4, 1).unwrap().ok);

        let concave = FnProx::new(2, 0.5, |x| -linalg::norm_sq(x), |x, _| x.to_vec()).unwrap();
        let res = check_prox_wellposed(&concave, 8, 3).unwrap();
        assert!(!res.ok && res.probed);
        assert!(res.witness.is_some());

        let fine = FnProx::new(2, 1.0, linalg::norm, |x, _| x.to_vec()).unwrap();
        assert!(check_prox_wellposed(&fine, 8, 3).unwrap().ok);
        assert!(check_prox_wellposed(&fine, 0, 3).is_err());
    }
}
