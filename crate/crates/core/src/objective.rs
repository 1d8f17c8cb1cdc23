//! Smooth objectives with Lipschitz gradients.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::point::Point;

/// A continuously differentiable function with an `L`-Lipschitz gradient.
///
/// `lipschitz_bound` must be a hard upper bound: the solvers enforce
/// `gamma * L < 1` from it. `is_convex` may only return `true` when the
/// function is convex; it switches the quantitative certificate to its
/// tighter form.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn lipschitz_bound(&self) -> f64;
    fn is_convex(&self) -> bool {
        false
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn lipschitz_bound(&self) -> f64 {
        (**self).lipschitz_bound()
    }
    fn is_convex(&self) -> bool {
        (**self).is_convex()
    }
}

type ValueFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Objective backed by user closures. The Lipschitz bound is declared, not
/// estimated.
pub struct FnObjective {
    dim: usize,
    value: ValueFn,
    gradient: GradFn,
    lipschitz: f64,
    convex: bool,
}

impl FnObjective {
    pub fn new<F, G>(dim: usize, lipschitz: f64, value: F, gradient: G) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::Construction("objective dimension must be positive".into()));
        }
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(Error::Construction(format!("lipschitz bound must be positive, got {lipschitz}")));
        }
        Ok(FnObjective { dim, value: Box::new(value), gradient: Box::new(gradient), lipschitz, convex: false })
    }

    /// Marks the objective convex. The caller vouches for it.
    pub fn assume_convex(mut self) -> Self {
        self.convex = true;
        self
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
    fn is_convex(&self) -> bool {
        self.convex
    }
}

/// `f(x) = 1/2 x^T H x + <b, x> + c` with symmetric `H`.
///
/// The Lipschitz constant is the spectral norm of `H` (power iteration,
/// tolerance `1e-10`, at most 10 000 iterations); convexity is read off the
/// smallest eigenvalue.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dim: usize,
    hessian: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
    lipschitz: f64,
    convex: bool,
}

impl Quadratic {
    pub fn new(hessian: Vec<f64>, linear: Vec<f64>, constant: f64) -> Result<Self> {
        let dim = linear.len();
        if dim == 0 {
            return Err(Error::Construction("quadratic must have positive dimension".into()));
        }
        check_dim(dim * dim, hessian.len())?;
        if hessian.iter().chain(&linear).any(|v| !v.is_finite()) || !constant.is_finite() {
            return Err(Error::NonFinite("quadratic coefficients".into()));
        }
        if !linalg::is_symmetric(&hessian, dim, 1e-12) {
            return Err(Error::Construction("hessian must be symmetric".into()));
        }
        let lipschitz = linalg::spectral_norm_power(&hessian, dim, 1e-10, 10_000)?;
        let min_eig = linalg::symmetric_eigenvalues(&hessian, dim)?[0];
        let convex = min_eig >= -1e-12 * lipschitz.max(1.0);
        Ok(Quadratic { dim, hessian, linear, constant, lipschitz, convex })
    }

    /// `1/2 sum_i w_i (x_i - c_i)^2`
    pub fn diagonal(weights: &[f64], center: &[f64]) -> Result<Self> {
        check_dim(weights.len(), center.len())?;
        let n = weights.len();
        let mut h = alloc::vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = weights[i];
        }
        let linear = weights.iter().zip(center).map(|(w, c)| -w * c).collect();
        let constant = 0.5 * weights.iter().zip(center).map(|(w, c)| w * c * c).sum::<f64>();
        Self::new(h, linear, constant)
    }

    /// `1/2 ||x - c||^2`
    pub fn half_squared_distance(center: &[f64]) -> Result<Self> {
        Self::diagonal(&alloc::vec![1.0; center.len()], center)
    }

    /// `(x - 1)^2 + y^2` on `R^2`: the textbook instance where the origin is
    /// critical on the 1-sparse set without being Fréchet stationary.
    pub fn sparse_example() -> Self {
        Self::new(alloc::vec![2.0, 0.0, 0.0, 2.0], alloc::vec![-2.0, 0.0], 1.0)
            .expect("constant coefficients are valid")
    }

    pub fn hessian(&self) -> &[f64] {
        &self.hessian
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// Unconstrained minimizer when `H` is positive definite.
    pub fn minimizer(&self) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self.linear.iter().map(|b| -b).collect();
        linalg::cholesky_solve(&self.hessian, self.dim, &rhs)
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        let hx = linalg::sym_matvec(&self.hessian, self.dim, x);
        0.5 * linalg::dot(x, &hx) + linalg::dot(&self.linear, x) + self.constant
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = linalg::sym_matvec(&self.hessian, self.dim, x);
        g.iter_mut().zip(&self.linear).for_each(|(gi, bi)| *gi += bi);
        g
    }
    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
    fn is_convex(&self) -> bool {
        self.convex
    }
}

/// Perturbation added to a base objective.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// `x -> <v, x>`
    Linear(Vec<f64>),
    /// `x -> eps ||x - c||^2`
    Quadratic { epsilon: f64, center: Vec<f64> },
}

/// `f + perturbation`, borrowing the base objective.
pub struct Perturbed<'a> {
    base: &'a dyn Objective,
    term: Perturbation,
}

impl<'a> Perturbed<'a> {
    pub fn new(base: &'a dyn Objective, term: Perturbation) -> Result<Self> {
        match &term {
            Perturbation::Linear(v) => check_dim(base.dim(), v.len())?,
            Perturbation::Quadratic { epsilon, center } => {
                check_dim(base.dim(), center.len())?;
                if !(epsilon.is_finite() && *epsilon >= 0.0) {
                    return Err(Error::Construction(format!("epsilon must be nonnegative, got {epsilon}")));
                }
            }
        }
        Ok(Perturbed { base, term })
    }

    pub fn term(&self) -> &Perturbation {
        &self.term
    }
}

impl Objective for Perturbed<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        let extra = match &self.term {
            Perturbation::Linear(v) => linalg::dot(v, x),
            Perturbation::Quadratic { epsilon, center } => epsilon * linalg::dist_sq(x, center),
        };
        self.base.value(x) + extra
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(x);
        match &self.term {
            Perturbation::Linear(v) => g.iter_mut().zip(v).for_each(|(gi, vi)| *gi += vi),
            Perturbation::Quadratic { epsilon, center } => g
                .iter_mut()
                .zip(x.iter().zip(center))
                .for_each(|(gi, (xi, ci))| *gi += 2.0 * epsilon * (xi - ci)),
        }
        g
    }
    fn lipschitz_bound(&self) -> f64 {
        match &self.term {
            Perturbation::Linear(_) => self.base.lipschitz_bound(),
            Perturbation::Quadratic { epsilon, .. } => self.base.lipschitz_bound() + 2.0 * epsilon,
        }
    }
    fn is_convex(&self) -> bool {
        self.base.is_convex()
    }
}

/// Central-difference approximation of the gradient. Validation only; the
/// solvers always use the analytic gradient.
pub fn finite_diff_gradient(obj: &dyn Objective, x: &Point, h: f64) -> Result<Vec<f64>> {
    check_dim(obj.dim(), x.dim())?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Precondition(format!("step h must be positive, got {h}")));
    }
    let mut probe = x.coords().to_vec();
    let mut grad = Vec::with_capacity(x.dim());
    for i in 0..x.dim() {
        let xi = probe[i];
        probe[i] = xi + h;
        let fp = obj.value(&probe);
        probe[i] = xi - h;
        let fm = obj.value(&probe);
        probe[i] = xi;
        if !(fp.is_finite() && fm.is_finite()) {
            return Err(Error::NonFinite(format!("objective value in stencil along axis {i}")));
        }
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzViolation {
    pub x: Point,
    pub y: Point,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCheck {
    pub max_ratio: f64,
    pub bound: f64,
    /// Worst pair when `max_ratio` exceeds the declared bound.
    pub violation: Option<LipschitzViolation>,
}

impl LipschitzCheck {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Largest gradient difference quotient over all pairs of `samples` points
/// drawn uniformly from the cube `[-radius, radius]^p`.
pub fn check_lipschitz(obj: &dyn Objective, samples: usize, radius: f64, seed: u64) -> Result<LipschitzCheck> {
    if samples < 2 {
        return Err(Error::Precondition("check_lipschitz needs at least two samples".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Precondition(format!("radius must be positive, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = obj.dim();
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| (0..dim).map(|_| rng.random_range(-radius..=radius)).collect())
        .collect();
    let grads: Vec<Vec<f64>> = points.iter().map(|p| obj.gradient(p)).collect();
    let bound = obj.lipschitz_bound();
    let mut max_ratio = 0.0_f64;
    let mut worst = (0, 1);
    for i in 0..samples {
        for j in (i + 1)..samples {
            let dx = linalg::dist(&points[i], &points[j]);
            if dx == 0.0 {
                continue;
            }
            let ratio = linalg::dist(&grads[i], &grads[j]) / dx;
            if !ratio.is_finite() {
                return Err(Error::NonFinite("gradient difference quotient".into()));
            }
            if ratio > max_ratio {
                max_ratio = ratio;
                worst = (i, j);
            }
        }
    }
    // Relative slack absorbs rounding in the quotient and in the bound.
    let violation = (max_ratio > bound * (1.0 + 1e-9) + 1e-12).then(|| LipschitzViolation {
        x: Point::from_vec_unchecked(points[worst.0].clone()),
        y: Point::from_vec_unchecked(points[worst.1].clone()),
        ratio: max_ratio,
    });
    Ok(LipschitzCheck { max_ratio, bound, violation })
}
