//! Projected gradient and proximal gradient iterations.
//!
//! Both methods share one loop: take a gradient step of length `gamma`,
//! then map the result back with a selection of the projection (or of the
//! prox of `gamma g`). With `F = f + g` and `gamma L < 1`, every step obeys
//!
//! ```text
//! F(x_k) - F(x_{k+1}) >= (1 - gamma L) / (2 gamma) ||x_{k+1} - x_k||^2
//! ```
//!
//! which [`Trace::min_descent_margin`] checks after the fact.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::objective::Objective;
use crate::point::Point;
use crate::prox::ProxOperator;
use crate::sets::ConstraintSet;
use crate::MEMBERSHIP_TOL;

/// Iterates whose norm exceeds this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Step size. `None` selects `0.9 / L`.
    pub gamma: Option<f64>,
    pub max_iters: usize,
    /// Stop once `||x_{k+1} - x_k||` is at most this.
    pub increment_tol: f64,
    /// Threshold on the tangent cone residual.
    pub residual_tol: f64,
    /// Also stop as soon as the residual drops below `residual_tol`. Off by
    /// default: the increment rule is the primary criterion.
    pub stop_on_residual: bool,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: None,
            max_iters: 10_000,
            increment_tol: 1e-10,
            residual_tol: 1e-8,
            stop_on_residual: false,
            record_trace: true,
        }
    }
}

impl SolverConfig {
    pub fn with_gamma(gamma: f64) -> Self {
        SolverConfig { gamma: Some(gamma), ..Self::default() }
    }

    /// Validated step size for an objective with gradient Lipschitz
    /// constant `lipschitz`.
    pub fn step_size(&self, lipschitz: f64) -> Result<f64> {
        if !(self.increment_tol >= 0.0 && self.residual_tol >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        let gamma = match self.gamma {
            Some(g) => g,
            None if lipschitz > 0.0 => 0.9 / lipschitz,
            None => return Err(Error::Config("an explicit step size is required when L = 0".into())),
        };
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {gamma}")));
        }
        if gamma * lipschitz >= 1.0 {
            return Err(Error::Config(format!(
                "step size {gamma} violates gamma * L < 1 (L = {lipschitz}, 1/L = {})",
                1.0 / lipschitz
            )));
        }
        Ok(gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    IncrementTol,
    ResidualTol,
    MaxIters,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::IncrementTol => "increment_tol",
            StopReason::ResidualTol => "residual_tol",
            StopReason::MaxIters => "max_iters",
        }
    }
}

/// Per-iteration history. `iterates`, `values` and `residuals` hold one
/// entry per iterate `x_0 .. x_n`; `increments` and `subdiff_dist_bounds`
/// one entry per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub iterates: Vec<Point>,
    /// `F(x_k) = f(x_k) + g(x_k)`.
    pub values: Vec<f64>,
    pub increments: Vec<f64>,
    /// `||proj_{T_C(x_k)}(-grad f(x_k))||` when a tangent cone oracle exists.
    pub residuals: Vec<Option<f64>>,
    /// `||x_{k+1} - x_k|| + ||grad f(x_k) - grad f(x_{k+1})||`, an upper
    /// bound on `dist(-grad f(x_{k+1}), regular subdifferential of g)`.
    pub subdiff_dist_bounds: Vec<f64>,
}

impl Trace {
    /// Smallest slack of the sufficient decrease inequality over all steps
    /// (`+inf` for an empty trace).
    pub fn min_descent_margin(&self, gamma: f64, lipschitz: f64) -> f64 {
        let coef = (1.0 - gamma * lipschitz) / (2.0 * gamma);
        self.values
            .windows(2)
            .zip(&self.increments)
            .map(|(v, inc)| v[0] - v[1] - coef * inc * inc)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub final_point: Point,
    pub iterations_used: usize,
    pub stop_reason: StopReason,
    pub gamma: f64,
    /// `1 - gamma L`, the decrease constant of the rescaled problem.
    pub delta: f64,
    pub final_value: f64,
    pub final_residual: Option<f64>,
    pub trace: Option<Trace>,
}

fn finite_grad(obj: &dyn Objective, x: &[f64]) -> Result<Vec<f64>> {
    let g = obj.gradient(x);
    check_dim(x.len(), g.len())?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient at {x:?}")));
    }
    Ok(g)
}

fn tangent_residual(set: Option<&dyn ConstraintSet>, x: &[f64], grad: &[f64]) -> Result<Option<f64>> {
    match set {
        Some(s) if s.has_tangent_cone() => {
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            Ok(Some(s.tangent_project(x, &neg)?.norm()))
        }
        _ => Ok(None),
    }
}

/// Shared loop. `step` maps the forward point `x - gamma grad f(x)` to the
/// next iterate; `penalty` evaluates `g`.
fn iterate(
    obj: &dyn Objective,
    x0: &Point,
    gamma: f64,
    cfg: &SolverConfig,
    set: Option<&dyn ConstraintSet>,
    penalty: &dyn Fn(&[f64]) -> f64,
    step: &dyn Fn(&[f64]) -> Result<Point>,
) -> Result<SolveResult> {
    let value = |x: &[f64]| -> Result<f64> {
        let v = obj.value(x) + penalty(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("non-finite objective value at {x:?}")))
        }
    };
    let mut x = x0.clone();
    let mut grad = finite_grad(obj, &x)?;
    let mut fx = value(&x)?;
    let mut residual = tangent_residual(set, &x, &grad)?;
    let mut trace = cfg.record_trace.then(|| Trace {
        iterates: alloc::vec![x.clone()],
        values: alloc::vec![fx],
        residuals: alloc::vec![residual],
        ..Trace::default()
    });

    let mut stop = StopReason::MaxIters;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let forward = linalg::axpy(&x, -gamma, &grad);
        if forward.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient step at iteration {iterations}")));
        }
        let next = step(&forward)?;
        if next.norm() > DIVERGENCE_NORM {
            return Err(Error::Numeric(format!("iterate norm exceeded {DIVERGENCE_NORM:e} at iteration {iterations}")));
        }
        let next_grad = finite_grad(obj, &next)?;
        let next_value = value(&next)?;
        let increment = linalg::dist(&next, &x);
        let subdiff_bound = increment + linalg::dist(&grad, &next_grad);
        residual = tangent_residual(set, &next, &next_grad)?;
        iterations += 1;
        if let Some(t) = trace.as_mut() {
            t.iterates.push(next.clone());
            t.values.push(next_value);
            t.increments.push(increment);
            t.residuals.push(residual);
            t.subdiff_dist_bounds.push(subdiff_bound);
        }
        x = next;
        grad = next_grad;
        fx = next_value;
        if increment <= cfg.increment_tol {
            stop = StopReason::IncrementTol;
            break;
        }
        if cfg.stop_on_residual && residual.is_some_and(|r| r <= cfg.residual_tol) {
            stop = StopReason::ResidualTol;
            break;
        }
    }
    Ok(SolveResult {
        final_point: x,
        iterations_used: iterations,
        stop_reason: stop,
        gamma,
        delta: 1.0 - gamma * obj.lipschitz_bound(),
        final_value: fx,
        final_residual: residual,
        trace,
    })
}

/// `x_{k+1} = proj_C(x_k - gamma grad f(x_k))`, using the set's deterministic
/// projection selection.
pub fn projected_gradient(
    obj: &dyn Objective,
    set: &dyn ConstraintSet,
    x0: &Point,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    check_dim(obj.dim(), set.dim())?;
    check_dim(set.dim(), x0.dim())?;
    let gamma = cfg.step_size(obj.lipschitz_bound())?;
    if !set.contains(x0, MEMBERSHIP_TOL) {
        return Err(Error::Precondition(format!("initial point {:?} is not feasible", x0.coords())));
    }
    iterate(obj, x0, gamma, cfg, Some(set), &|_| 0.0, &|y| set.project_one(y))
}

/// `x_{k+1} = prox_{gamma g}(x_k - gamma grad f(x_k))`.
///
/// This is the unit-step proximal gradient method applied to `gamma f` and
/// `gamma g`, whose smooth part has Lipschitz constant `gamma L < 1`. For an
/// indicator `g` it reproduces [`projected_gradient`] exactly.
pub fn proximal_gradient(
    obj: &dyn Objective,
    g: &dyn ProxOperator,
    x0: &Point,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    check_dim(obj.dim(), g.dim())?;
    check_dim(g.dim(), x0.dim())?;
    let gamma = cfg.step_size(obj.lipschitz_bound())?;
    if !g.value(x0).is_finite() {
        return Err(Error::Precondition(format!("penalty is infinite at the initial point {:?}", x0.coords())));
    }
    iterate(obj, x0, gamma, cfg, g.as_constraint_set(), &|x| g.value(x), &|y| g.prox_one(y, gamma))
}
