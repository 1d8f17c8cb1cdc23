//! Concurrent batches of independent solves and sweep samples. Results come
//! back in input order regardless of scheduling.

use frechet_core::genericity::{run_sample, PerturbationExperiment, SweepReport};
use frechet_core::solver::{projected_gradient, proximal_gradient};
use frechet_core::{ConstraintSet, Objective, Point, ProxOperator, SolveResult, SolverConfig};
use rayon::prelude::*;

use crate::error::CliResult;

#[derive(Debug, Clone)]
pub struct Run {
    pub id: usize,
    pub gamma: f64,
    pub x0: Point,
    pub result: SolveResult,
}

/// Every `(gamma, x0)` pair, gamma-major, run ids in that order.
pub fn run_grid_of_starts(
    obj: &dyn Objective,
    set: &dyn ConstraintSet,
    gammas: &[f64],
    inits: &[Point],
    base: &SolverConfig,
) -> CliResult<Vec<Run>> {
    let jobs: Vec<(f64, &Point)> = gammas.iter().flat_map(|&g| inits.iter().map(move |x| (g, x))).collect();
    jobs.par_iter()
        .enumerate()
        .map(|(id, &(gamma, x0))| {
            let cfg = SolverConfig { gamma: Some(gamma), ..base.clone() };
            let result = projected_gradient(obj, set, x0, &cfg)?;
            Ok(Run { id, gamma, x0: x0.clone(), result })
        })
        .collect()
}

pub fn run_prox(obj: &dyn Objective, g: &dyn ProxOperator, gamma: f64, x0: &Point, base: &SolverConfig) -> CliResult<Run> {
    let cfg = SolverConfig { gamma: Some(gamma), ..base.clone() };
    let result = proximal_gradient(obj, g, x0, &cfg)?;
    Ok(Run { id: 0, gamma, x0: x0.clone(), result })
}

/// Parallel version of the core sweep; identical output.
pub fn parallel_sweep(exp: &PerturbationExperiment<'_>) -> CliResult<SweepReport> {
    exp.validate()?;
    let records = (0..exp.total_samples())
        .into_par_iter()
        .map(|i| run_sample(exp, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepReport::from_records(exp.seed, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use frechet_core::genericity::{run_perturbation_sweep, sparse_quadratic_model, sparse_sweep_inits};
    use frechet_core::sets::SparseSet;
    use frechet_core::Quadratic;

    #[test]
    fn parallel_sweep_matches_sequential() {
        let f = Quadratic::sparse_example();
        let c = SparseSet::new(2, 1).unwrap();
        let mut exp = PerturbationExperiment::new(&f, &c, sparse_sweep_inits());
        exp.count = 64;
        exp.solver = SolverConfig::with_gamma(0.25);
        exp.analytic = Some(sparse_quadratic_model());
        exp.forced = vec![vec![1.0, 0.0]];
        let a = parallel_sweep(&exp).unwrap();
        let b = run_perturbation_sweep(&exp).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bad_count, 1);
    }

    #[test]
    fn runs_are_ordered_gamma_major() {
        let f = Quadratic::sparse_example();
        let c = SparseSet::new(2, 1).unwrap();
        let inits = vec![Point::zeros(2), Point::from_slice(&[0.0, 2.0]).unwrap()];
        let runs = run_grid_of_starts(&f, &c, &[0.1, 0.4], &inits, &SolverConfig::default()).unwrap();
        let order: Vec<(usize, f64, f64)> = runs.iter().map(|r| (r.id, r.gamma, r.x0[1])).collect();
        assert_eq!(order, vec![(0, 0.1, 0.0), (1, 0.1, 2.0), (2, 0.4, 0.0), (3, 0.4, 2.0)]);
    }
}
