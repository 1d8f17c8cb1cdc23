//! Monte Carlo check that random perturbations remove critical points that
//! are not Fréchet stationary.
//!
//! Each sample draws a vector uniformly from a ball, perturbs the base
//! objective with it, runs projected gradient from a fixed list of
//! initializations and classifies every limit. Samples are seeded
//! individually from `(seed, index)`, so any partition of the index range
//! across workers reproduces the sequential sweep exactly.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{criticality_test, frechet_residual};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::objective::{Objective, Perturbation, Perturbed};
use crate::point::Point;
use crate::sets::ConstraintSet;
use crate::solver::{projected_gradient, SolverConfig};

/// Limits closer than this (max norm) are reported once.
pub const DEDUP_TOL: f64 = 1e-6;
/// Samples closer than this to the known bad set are flagged.
pub const NEAR_DEGENERATE_DIST: f64 = 1e-3;

/// How the sampled vector enters the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationMode {
    /// `f + <v, .>`
    Linear,
    /// `f + epsilon ||. - c||^2` with the sampled vector as `c`.
    Quadratic { epsilon: f64 },
}

impl PerturbationMode {
    pub fn term(&self, v: &[f64]) -> Perturbation {
        match *self {
            PerturbationMode::Linear => Perturbation::Linear(v.to_vec()),
            PerturbationMode::Quadratic { epsilon } => Perturbation::Quadratic { epsilon, center: v.to_vec() },
        }
    }
}

/// Closed-form knowledge about an instance under linear perturbation.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticModel {
    /// Every critical point of `f_v` on `C`.
    pub critical_points: fn(&[f64]) -> Vec<Vec<f64>>,
    /// Distance from `v` to the set of perturbations with a critical point
    /// that is not Fréchet stationary.
    pub bad_set_distance: fn(&[f64]) -> f64,
}

pub struct PerturbationExperiment<'a> {
    pub base: &'a dyn Objective,
    pub set: &'a dyn ConstraintSet,
    pub mode: PerturbationMode,
    pub radius: f64,
    pub count: usize,
    pub seed: u64,
    /// Extra vectors evaluated after the random ones, with indices
    /// `count, count + 1, ...`.
    pub forced: Vec<Vec<f64>>,
    pub inits: Vec<Point>,
    pub solver: SolverConfig,
    /// A limit is Fréchet when its residual is at most this.
    pub frechet_tol: f64,
    /// Tolerance of the limiting normal test.
    pub critical_tol: f64,
    /// Only valid in linear mode.
    pub analytic: Option<AnalyticModel>,
}

impl<'a> PerturbationExperiment<'a> {
    pub fn new(base: &'a dyn Objective, set: &'a dyn ConstraintSet, inits: Vec<Point>) -> Self {
        PerturbationExperiment {
            base,
            set,
            mode: PerturbationMode::Linear,
            radius: 1.0,
            count: 10_000,
            seed: 42,
            forced: Vec::new(),
            inits,
            solver: SolverConfig::default(),
            frechet_tol: 1e-6,
            critical_tol: 1e-7,
            analytic: None,
        }
    }

    pub fn total_samples(&self) -> usize {
        self.count + self.forced.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.base.dim(), self.set.dim())?;
        if self.total_samples() == 0 {
            return Err(Error::Config("sample count must be positive".into()));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {}", self.radius)));
        }
        if self.inits.is_empty() {
            return Err(Error::Config("at least one initialization is required".into()));
        }
        for x in &self.inits {
            check_dim(self.set.dim(), x.dim())?;
        }
        for v in &self.forced {
            check_dim(self.set.dim(), v.len())?;
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::Config(format!("forced sample {v:?} is not finite")));
            }
        }
        if self.analytic.is_some() && self.mode != PerturbationMode::Linear {
            return Err(Error::Config("analytic critical points assume linear perturbations".into()));
        }
        self.solver.step_size(self.perturbed_lipschitz())?;
        Ok(())
    }

    fn perturbed_lipschitz(&self) -> f64 {
        match self.mode {
            PerturbationMode::Linear => self.base.lipschitz_bound(),
            PerturbationMode::Quadratic { epsilon } => self.base.lipschitz_bound() + 2.0 * epsilon,
        }
    }

    /// The perturbation vector of sample `index`.
    pub fn sample_vector(&self, index: usize) -> Vec<f64> {
        if index >= self.count {
            return self.forced[index - self.count].clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        uniform_in_ball(&mut rng, self.set.dim(), self.radius)
    }
}

/// Rejection sampling from the enclosing cube.
fn uniform_in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if linalg::norm_sq(&v) <= 1.0 {
            return linalg::scale(&v, radius);
        }
    }
}

/// One classified point of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedPoint {
    pub point: Point,
    pub residual: f64,
    pub critical: bool,
    pub frechet: bool,
    /// Reached by the solver (as opposed to only listed analytically).
    pub from_solver: bool,
}

impl ClassifiedPoint {
    pub fn is_bad(&self) -> bool {
        self.critical && !self.frechet
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: usize,
    pub v: Vec<f64>,
    pub points: Vec<ClassifiedPoint>,
    pub numeric_errors: usize,
    pub near_degenerate: bool,
}

impl SampleRecord {
    pub fn is_bad(&self) -> bool {
        self.points.iter().any(ClassifiedPoint::is_bad)
    }
}

/// Runs and classifies sample `index`. Solver numeric errors are counted,
/// not raised; anything else (such as an infeasible initialization) is.
pub fn run_sample(exp: &PerturbationExperiment<'_>, index: usize) -> Result<SampleRecord> {
    let v = exp.sample_vector(index);
    let f = Perturbed::new(exp.base, exp.mode.term(&v))?;
    let mut found: Vec<(Point, bool)> = Vec::new();
    let mut push = |p: Point, from_solver: bool| {
        match found.iter_mut().find(|(q, _)| linalg::max_abs_diff(q, &p) <= DEDUP_TOL) {
            Some(entry) => entry.1 |= from_solver,
            None => found.push((p, from_solver)),
        }
    };
    let cfg = SolverConfig { record_trace: false, ..exp.solver.clone() };
    let mut numeric_errors = 0;
    for x0 in &exp.inits {
        match projected_gradient(&f, exp.set, x0, &cfg) {
            Ok(res) => push(res.final_point, true),
            Err(Error::Numeric(_)) => numeric_errors += 1,
            Err(e) => return Err(e),
        }
    }
    if let Some(model) = &exp.analytic {
        for c in (model.critical_points)(&v) {
            push(Point::new(c)?, false);
        }
    }
    let mut points = Vec::with_capacity(found.len());
    for (p, from_solver) in found {
        let residual = frechet_residual(&f, exp.set, &p)?;
        let critical = criticality_test(&f, exp.set, &p, exp.critical_tol)?;
        points.push(ClassifiedPoint { point: p, residual, critical, frechet: residual <= exp.frechet_tol, from_solver });
    }
    let near_degenerate = exp.analytic.is_some_and(|m| (m.bad_set_distance)(&v) < NEAR_DEGENERATE_DIST);
    Ok(SampleRecord { index, v, points, numeric_errors, near_degenerate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub seed: u64,
    /// Sorted by sample index.
    pub records: Vec<SampleRecord>,
    pub bad_count: usize,
    pub near_degenerate_count: usize,
    pub numeric_error_count: usize,
}

impl SweepReport {
    /// Aggregates records produced in any order.
    pub fn from_records(seed: u64, mut records: Vec<SampleRecord>) -> Self {
        records.sort_by_key(|r| r.index);
        SweepReport {
            seed,
            bad_count: records.iter().filter(|r| r.is_bad()).count(),
            near_degenerate_count: records.iter().filter(|r| r.near_degenerate).count(),
            numeric_error_count: records.iter().map(|r| r.numeric_errors).sum(),
            records,
        }
    }

    pub fn bad_indices(&self) -> Vec<usize> {
        self.records.iter().filter(|r| r.is_bad()).map(|r| r.index).collect()
    }
}

/// Sequential sweep over all samples.
pub fn run_perturbation_sweep(exp: &PerturbationExperiment<'_>) -> Result<SweepReport> {
    exp.validate()?;
    let records = (0..exp.total_samples()).map(|i| run_sample(exp, i)).collect::<Result<Vec<_>>>()?;
    Ok(SweepReport::from_records(exp.seed, records))
}

/// Whether `f_v(x, y) = (x - 1)^2 + y^2 + v1 x + v2 y` has a critical point
/// on the union of the axes that is not Fréchet stationary.
///
/// Off the origin the critical points are the axis minimizers, which are
/// stationary along their axis and hence Fréchet. At the origin
/// `-grad f_v(0) = (2 - v1, -v2)` is a limiting normal iff one coordinate
/// vanishes, and a regular normal iff both do. So the bad set is the union
/// of the lines `v1 = 2` and `v2 = 0` without the point `(2, 0)`.
pub fn sparse_quadratic_bad_set_oracle(v: &[f64]) -> bool {
    let on_first = v[0] == 2.0;
    let on_second = v[1] == 0.0;
    on_first != on_second
}

/// Distance from `v` to the closure of the bad set above.
pub fn sparse_quadratic_bad_set_distance(v: &[f64]) -> f64 {
    (v[0] - 2.0).abs().min(v[1].abs())
}

/// All critical points of the perturbed sparse instance: the origin and the
/// minimizer of `f_v` along each axis.
pub fn sparse_quadratic_critical_points(v: &[f64]) -> Vec<Vec<f64>> {
    alloc::vec![alloc::vec![0.0, 0.0], alloc::vec![1.0 - v[0] / 2.0, 0.0], alloc::vec![0.0, -v[1] / 2.0]]
}

pub fn sparse_quadratic_model() -> AnalyticModel {
    AnalyticModel {
        critical_points: sparse_quadratic_critical_points,
        bad_set_distance: sparse_quadratic_bad_set_distance,
    }
}

/// The nine initializations used by the sparse sweep: the origin and
/// `±1`, `±2` on each axis.
pub fn sparse_sweep_inits() -> Vec<Point> {
    let mut out = alloc::vec![Point::zeros(2)];
    for t in [1.0, -1.0, 2.0, -2.0] {
        out.push(Point::from_vec_unchecked(alloc::vec![t, 0.0]));
    }
    for t in [1.0, -1.0, 2.0, -2.0] {
        out.push(Point::from_vec_unchecked(alloc::vec![0.0, t]));
    }
    out
}
