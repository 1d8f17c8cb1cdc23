use frechet_core::diagnostics::{
    criticality_test, frechet_residual, polar_cone_inequality_check, quantitative_certificate,
};
use frechet_core::linalg;
use frechet_core::objective::{Perturbation, Perturbed};
use frechet_core::prox::{Indicator, L0Penalty, QuadraticPenalty};
use frechet_core::sets::{BoxSet, FinitePointSet, GridSet, RankBoundedSet, SparseSet};
use frechet_core::solver::{projected_gradient, proximal_gradient};
use frechet_core::{ConstraintSet, Objective, Point, ProxOperator, Quadratic, SolverConfig, StopReason};
use proptest::prelude::*;

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, dim)
}

/// Coordinates on a quarter lattice so that ties actually occur.
fn lattice_coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-12i32..=12).prop_map(|i| i as f64 * 0.25), dim)
}

fn any_coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![coords(dim), lattice_coords(dim)]
}

fn sets() -> Vec<(&'static str, Box<dyn ConstraintSet>)> {
    let finite = FinitePointSet::new(
        [[0.0, 0.0, 0.0], [1.0, -1.0, 0.5], [2.0, 2.0, -2.0], [-1.5, 0.5, 1.0], [0.0, 3.0, 0.0]]
            .iter()
            .map(|p| Point::from_slice(p).unwrap())
            .collect(),
    )
    .unwrap();
    vec![
        ("sparse k=1", Box::new(SparseSet::new(3, 1).unwrap())),
        ("sparse k=2", Box::new(SparseSet::new(3, 2).unwrap())),
        ("grid", Box::new(GridSet::new(0.5, vec![-2.0, -1.0, -3.0], vec![2.0, 1.5, 0.0]).unwrap())),
        ("box", Box::new(BoxSet::new(vec![-1.0, 0.0, -2.0], vec![1.0, 2.0, 3.0]).unwrap())),
        ("finite", Box::new(finite)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn projections_are_equidistant_feasible_and_contain_the_representative(x in any_coords(3)) {
        for (name, set) in sets() {
            let all = set.project_all(&x).unwrap();
            prop_assert!(!all.points.is_empty());
            let d: Vec<f64> = all.points.iter().map(|z| linalg::dist(z, &x)).collect();
            let min = d.iter().copied().fold(f64::INFINITY, f64::min);
            for (z, di) in all.points.iter().zip(&d) {
                prop_assert!(set.contains(z, 1e-9), "{name}: {z:?}");
                prop_assert!((di - min).abs() <= 1e-12 * min.max(1.0), "{name}");
            }
            let one = set.project_one(&x).unwrap();
            prop_assert!(all.points.iter().any(|z| linalg::max_abs_diff(z, &one) <= 1e-12), "{name}");
            let again = set.project_one(&one).unwrap();
            prop_assert!(linalg::max_abs_diff(&again, &one) <= 1e-12, "{name}");
        }
    }

    #[test]
    fn projections_beat_random_feasible_points(x in coords(3), y in coords(3)) {
        for (name, set) in sets() {
            let z = set.project_one(&x).unwrap();
            let w = set.project_one(&y).unwrap();
            prop_assert!(linalg::dist(&z, &x) <= linalg::dist(&w, &x) + 1e-12, "{name}");
        }
    }

    #[test]
    fn rank_projection_beats_rank_one_candidates(m in coords(6), u in coords(3), v in coords(2)) {
        let set = RankBoundedSet::new(3, 2, 1).unwrap();
        let p = set.project_one(&m).unwrap();
        let s = set.singular_values(&p).unwrap();
        prop_assert!(s[1] <= 1e-9 * s[0].max(1.0));
        let cand: Vec<f64> = (0..6).map(|i| u[i / 2] * v[i % 2]).collect();
        prop_assert!(linalg::dist(&p, &m) <= linalg::dist(&cand, &m) + 1e-9);
        let sm = set.singular_values(&m).unwrap();
        prop_assert!((linalg::dist(&p, &m) - sm[1]).abs() < 1e-9);
    }

    #[test]
    fn box_projection_is_nonexpansive(x in coords(3), y in coords(3)) {
        let b = BoxSet::new(vec![-1.0, 0.0, -2.0], vec![1.0, 2.0, 3.0]).unwrap();
        let px = b.project_one(&x).unwrap();
        let py = b.project_one(&y).unwrap();
        prop_assert!(linalg::dist(&px, &py) <= linalg::dist(&x, &y) + 1e-12);
    }

    #[test]
    fn tangent_projection_is_positively_homogeneous(x in lattice_coords(3), v in coords(3), lam in 0.0..10.0f64) {
        for (name, set) in sets() {
            if !set.has_tangent_cone() {
                continue;
            }
            let base = set.project_one(&x).unwrap();
            let d = set.tangent_project(&base, &v).unwrap();
            let dl = set.tangent_project(&base, &linalg::scale(&v, lam)).unwrap();
            prop_assert!(linalg::max_abs_diff(&dl, &linalg::scale(&d, lam)) <= 1e-9 * (1.0 + lam), "{name}");
            // Projection onto a cone: d is orthogonal to v - d.
            prop_assert!(linalg::dot(&d, &linalg::sub(&v, &d)).abs() <= 1e-10, "{name}");
        }
    }

    #[test]
    fn frechet_implies_critical(x in lattice_coords(3), center in lattice_coords(3)) {
        let f = Quadratic::half_squared_distance(&center).unwrap();
        for (name, set) in sets() {
            if !(set.has_tangent_cone() && set.has_limiting_normals()) {
                continue;
            }
            let base = set.project_one(&x).unwrap();
            let r = frechet_residual(&f, set.as_ref(), &base).unwrap();
            if r <= 1e-8 {
                prop_assert!(criticality_test(&f, set.as_ref(), &base, 1e-7).unwrap(), "{name} at {base:?}");
            }
        }
    }

    #[test]
    fn prox_minimizes_against_random_competitors(x in any_coords(3), w in coords(3), scale in 0.1..2.0f64) {
        let ops: Vec<Box<dyn ProxOperator>> = vec![
            Box::new(Indicator::new(SparseSet::new(3, 1).unwrap())),
            Box::new(Indicator::new(GridSet::uniform(3, 0.5, -2.0, 2.0).unwrap())),
            Box::new(L0Penalty::new(3, 0.5).unwrap()),
            Box::new(QuadraticPenalty::new(vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0], vec![0.5, 0.0, -1.0]).unwrap()),
        ];
        for g in &ops {
            let score = |y: &[f64]| scale * g.value(y) + 0.5 * linalg::dist_sq(y, &x);
            let all = g.prox_all(&x, scale).unwrap();
            let best = score(&all.points[0]);
            for z in &all.points {
                prop_assert!((score(z) - best).abs() <= 1e-12 * best.abs().max(1.0));
            }
            prop_assert!(best <= score(&w) + 1e-12);
            let one = g.prox_one(&x, scale).unwrap();
            prop_assert!(all.points.contains(&one));
        }
    }

    #[test]
    fn sparse_runs_descend_and_reach_zero_residual(
        x0 in (-2.0..2.0f64, any::<bool>()),
        gamma in 0.01..0.49f64,
    ) {
        let f = Quadratic::sparse_example();
        let c = SparseSet::new(2, 1).unwrap();
        let start = if x0.1 { [x0.0, 0.0] } else { [0.0, x0.0] };
        let res = projected_gradient(&f, &c, &Point::from_slice(&start).unwrap(), &SolverConfig::with_gamma(gamma)).unwrap();
        let trace = res.trace.as_ref().unwrap();
        prop_assert!(trace.min_descent_margin(gamma, 2.0) >= -1e-12);
        prop_assert!(trace.values.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(trace.iterates.iter().all(|x| c.contains(x, 1e-9)));
        prop_assert_ne!(res.stop_reason, StopReason::MaxIters);
        prop_assert!(res.final_residual.unwrap() <= 1e-8);
        prop_assert!(*trace.subdiff_dist_bounds.last().unwrap() <= 1e-10 * (1.0 + 2.0));
        prop_assert!(linalg::max_abs_diff(&res.final_point, &[1.0, 0.0]) <= 1e-6);
    }

    #[test]
    fn box_runs_reach_zero_residual(x0 in coords(2), center in coords(2), w in (0.1..3.0f64, 0.1..3.0f64)) {
        let f = Quadratic::diagonal(&[w.0, w.1], &center).unwrap();
        let b = BoxSet::uniform(2, -1.0, 1.0).unwrap();
        let start = b.project_one(&x0).unwrap();
        let res = projected_gradient(&f, &b, &start, &SolverConfig::default()).unwrap();
        prop_assert_ne!(res.stop_reason, StopReason::MaxIters);
        prop_assert!(res.final_residual.unwrap() <= 1e-8);
        let trace = res.trace.unwrap();
        prop_assert!(trace.min_descent_margin(res.gamma, f.lipschitz_bound()) >= -1e-12);
    }

    #[test]
    fn indicator_runs_match_projected_runs(x0 in lattice_coords(2), center in lattice_coords(2)) {
        let f = Quadratic::half_squared_distance(&center).unwrap();
        let g = GridSet::uniform(2, 1.0, -3.0, 3.0).unwrap();
        let start = g.project_one(&x0).unwrap();
        let cfg = SolverConfig::with_gamma(0.5);
        let a = projected_gradient(&f, &g, &start, &cfg).unwrap();
        let b = proximal_gradient(&f, &Indicator::new(g.clone()), &start, &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn l0_runs_satisfy_the_descent_inequality(x0 in coords(3), center in coords(3), lambda in 0.01..2.0f64) {
        let f = Quadratic::half_squared_distance(&center).unwrap();
        let g = L0Penalty::new(3, lambda).unwrap();
        let cfg = SolverConfig::with_gamma(0.7);
        let res = proximal_gradient(&f, &g, &Point::new(x0).unwrap(), &cfg).unwrap();
        let trace = res.trace.unwrap();
        prop_assert!(trace.min_descent_margin(0.7, 1.0) >= -1e-12);
        prop_assert!(*trace.subdiff_dist_bounds.last().unwrap() <= 1e-10 * 2.0);
    }

    #[test]
    fn certificate_holds_at_grid_limits(x0 in lattice_coords(2), center in lattice_coords(2), gamma in 0.05..0.99f64) {
        let f = Quadratic::half_squared_distance(&center).unwrap();
        let g = GridSet::uniform(2, 0.5, -2.0, 2.0).unwrap();
        let start = g.project_one(&x0).unwrap();
        let res = projected_gradient(&f, &g, &start, &SolverConfig::with_gamma(gamma)).unwrap();
        prop_assert_ne!(res.stop_reason, StopReason::MaxIters);
        let all: Vec<Point> = g.points().collect();
        let cert = quantitative_certificate(&f, &g, &res.final_point, gamma, &all).unwrap();
        prop_assert!(cert.ok, "{:?}", cert);
    }

    #[test]
    fn certificate_holds_at_sparse_and_box_limits(x0 in -2.0..2.0f64, v in coords(2), gamma in 0.05..0.49f64) {
        let base = Quadratic::sparse_example();
        let f = Perturbed::new(&base, Perturbation::Linear(v)).unwrap();
        let c = SparseSet::new(2, 1).unwrap();
        let res = projected_gradient(&f, &c, &Point::from_slice(&[x0, 0.0]).unwrap(), &SolverConfig::with_gamma(gamma)).unwrap();
        let w = c.witnesses(&res.final_point).unwrap();
        prop_assert!(quantitative_certificate(&f, &c, &res.final_point, gamma, &w.points).unwrap().ok);

        let b = BoxSet::uniform(2, -1.0, 1.0).unwrap();
        let res = projected_gradient(&f, &b, &Point::from_slice(&[0.0, 0.0]).unwrap(), &SolverConfig::with_gamma(gamma)).unwrap();
        let w = b.witnesses(&res.final_point).unwrap();
        prop_assert!(quantitative_certificate(&f, &b, &res.final_point, gamma, &w.points).unwrap().ok);
    }

    #[test]
    fn polar_inequality_holds(
        dim in 2usize..=4,
        rays in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 1..=6),
        x in prop::collection::vec(-3.0..3.0f64, 4),
    ) {
        let rays: Vec<Point> = rays
            .iter()
            .filter(|r| linalg::norm(&r[..dim]) > 1e-6)
            .map(|r| Point::from_slice(&r[..dim]).unwrap())
            .collect();
        let check = polar_cone_inequality_check(&rays, &x[..dim]).unwrap();
        prop_assert!(check.ok, "{:?}", check);
        prop_assert!(check.rhs <= linalg::norm(&x[..dim]) + 1e-12);
    }

    #[test]
    fn perturbed_lipschitz_bounds(v in coords(2), eps in 0.0..3.0f64) {
        let base = Quadratic::sparse_example();
        let lin = Perturbed::new(&base, Perturbation::Linear(v.clone())).unwrap();
        prop_assert_eq!(lin.lipschitz_bound(), base.lipschitz_bound());
        let quad = Perturbed::new(&base, Perturbation::Quadratic { epsilon: eps, center: v }).unwrap();
        prop_assert!((quad.lipschitz_bound() - (base.lipschitz_bound() + 2.0 * eps)).abs() < 1e-12);
    }

    #[test]
    fn points_reject_non_finite(mut c in coords(3), i in 0usize..3, bad in prop_oneof![Just(f64::NAN), Just(f64::INFINITY), Just(f64::NEG_INFINITY)]) {
        prop_assert!(Point::new(c.clone()).is_ok());
        c[i] = bad;
        prop_assert!(Point::new(c).is_err());
    }

    #[test]
    fn step_sizes_at_or_above_one_over_l_are_rejected(factor in 1.0..5.0f64) {
        let f = Quadratic::sparse_example();
        let c = SparseSet::new(2, 1).unwrap();
        let err = projected_gradient(&f, &c, &Point::zeros(2), &SolverConfig::with_gamma(factor / 2.0));
        prop_assert!(matches!(err, Err(frechet_core::Error::Config(_))));
    }
}

/// Paths approaching an l0 tie from both sides: limits of prox points stay
/// in the prox set at the limit.
#[test]
fn l0_prox_is_upper_semicontinuous_at_ties() {
    let g = L0Penalty::new(1, 0.5).unwrap();
    let tau = g.threshold(1.0);
    let at_tie = g.prox_all(&[tau], 1.0).unwrap();
    assert_eq!(at_tie.points.len(), 2);
    for side in [1.0, -1.0] {
        let mut last = None;
        for k in 1..=60 {
            let x = tau + side * 0.5f64.powi(k);
            let y = g.prox_one(&[x], 1.0).unwrap();
            last = Some(y[0]);
        }
        let y = last.unwrap();
        assert!(at_tie.points.iter().any(|z| (z[0] - y).abs() < 1e-12), "side {side}: {y}");
    }
}

#[test]
fn sparse_projection_is_upper_semicontinuous_at_ties() {
    let c = SparseSet::new(2, 1).unwrap();
    let at_tie = c.project_all(&[1.0, 1.0]).unwrap();
    for dir in [[1.0, 0.0], [0.0, 1.0], [1.0, -1.0], [-1.0, 1.0]] {
        let mut last = Point::zeros(2);
        for k in 1..=60 {
            let e = 0.5f64.powi(k);
            last = c.project_one(&[1.0 + e * dir[0], 1.0 + e * dir[1]]).unwrap();
        }
        assert!(at_tie.points.iter().any(|z| linalg::max_abs_diff(z, &last) < 1e-12), "{dir:?}");
    }
}
