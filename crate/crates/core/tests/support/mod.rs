//! Brute-force oracles shared by the core test suites and the CLI acceptance
//! run. Each check returns a description of the first disagreement.

#![allow(dead_code)]

use frechet_core::diagnostics::{criticality_test, frechet_residual, polar_cone_inequality_check};
use frechet_core::genericity::sparse_quadratic_bad_set_oracle;
use frechet_core::linalg;
use frechet_core::objective::{finite_diff_gradient, Perturbation, Perturbed};
use frechet_core::prox::{Indicator, L0Penalty, QuadraticPenalty};
use frechet_core::sets::{BoxSet, GridSet, SparseSet};
use frechet_core::{Objective, Point, ProxOperator, Quadratic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check<T = ()> = Result<T, String>;

pub fn nnz(x: &[f64]) -> usize {
    x.iter().filter(|c| **c != 0.0).count()
}

pub fn diag(d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = d[i];
    }
    m
}

/// `lo/100, ..., hi/100`.
pub fn centi_mesh(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| i as f64 / 100.0).collect()
}

/// Minimizer of `score` over the tensor mesh `axis^dim`.
pub fn mesh_argmin(dim: usize, axis: &[f64], score: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut best = (f64::INFINITY, vec![]);
    let mut idx = vec![0usize; dim];
    loop {
        let w: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        let s = score(&w);
        if s < best.0 {
            best = (s, w);
        }
        let mut d = 0;
        loop {
            if d == dim {
                return best.1;
            }
            idx[d] += 1;
            if idx[d] < axis.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn prox_matches_mesh(g: &dyn ProxOperator, x: &[f64], argmin: &[f64]) -> Check {
    let all = g.prox_all(x, 1.0).map_err(|e| e.to_string())?;
    let nearest = all.points.iter().map(|z| linalg::dist(z, argmin)).fold(f64::INFINITY, f64::min);
    if nearest > 0.01 {
        return Err(format!("x {x:?}: mesh argmin {argmin:?}, prox {:?}", all.points));
    }
    let score = |w: &[f64]| g.value(w) + 0.5 * linalg::dist_sq(w, x);
    for z in &all.points {
        if score(z) > score(argmin) + 1e-12 {
            return Err(format!("x {x:?}: prox point {z:?} scores worse than mesh argmin {argmin:?}"));
        }
    }
    Ok(())
}

fn random_centi_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-350..=350) as f64 / 100.0).collect()
}

/// Full 0.01 mesh over `[-4, 4]^dim` for dims 1 and 2. Returns the number
/// of cases compared.
pub fn prox_mesh_low_dims(seed: u64, per_operator: usize) -> Check<usize> {
    let axis = centi_mesh(-400, 400);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = 0;
    for dim in 1..=2 {
        let ops: Vec<Box<dyn ProxOperator>> = vec![
            Box::new(Indicator::new(SparseSet::new(dim, 1).unwrap())),
            Box::new(Indicator::new(BoxSet::uniform(dim, -1.0, 1.5).unwrap())),
            Box::new(Indicator::new(GridSet::uniform(dim, 0.5, -2.0, 2.0).unwrap())),
            Box::new(L0Penalty::new(dim, 0.5).unwrap()),
            Box::new(QuadraticPenalty::new(diag(&[0.3, 0.1][..dim]), vec![0.2; dim]).unwrap()),
        ];
        for g in &ops {
            for _ in 0..per_operator {
                let x = random_centi_point(&mut rng, dim);
                let score = |w: &[f64]| g.value(w) + 0.5 * linalg::dist_sq(w, &x);
                let argmin = mesh_argmin(dim, &axis, &score);
                prox_matches_mesh(g.as_ref(), &x, &argmin)?;
                cases += 1;
            }
        }
    }
    Ok(cases)
}

/// In three dimensions separable problems are minimized axis by axis (the
/// product mesh minimum of a sum of per-axis terms is the sum of per-axis
/// mesh minima); the coupled quadratic uses a coarse pass followed by an
/// exhaustive 0.01 pass around the coarse winner.
pub fn prox_mesh_three_dims(seed: u64) -> Check<usize> {
    let axis = centi_mesh(-400, 400);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = 0;
    let l0 = L0Penalty::new(3, 0.5).unwrap();
    for _ in 0..20 {
        let x = random_centi_point(&mut rng, 3);
        let argmin: Vec<f64> = (0..3)
            .map(|i| {
                let score = |w: &[f64]| l0.lambda() * nnz(w) as f64 + 0.5 * (w[0] - x[i]).powi(2);
                mesh_argmin(1, &axis, &score)[0]
            })
            .collect();
        prox_matches_mesh(&l0, &x, &argmin)?;
        cases += 1;
    }

    for k in 1..=2 {
        let g = Indicator::new(SparseSet::new(3, k).unwrap());
        for _ in 0..10 {
            let x = random_centi_point(&mut rng, 3);
            // Each k-subset of axes is minimized coordinatewise, the others
            // are zero.
            let mut best = (f64::INFINITY, vec![]);
            for mask in 0u32..8 {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let w: Vec<f64> = (0..3)
                    .map(|i| {
                        if mask & (1 << i) == 0 {
                            0.0
                        } else {
                            mesh_argmin(1, &axis, &|w: &[f64]| (w[0] - x[i]).powi(2))[0]
                        }
                    })
                    .collect();
                let s = linalg::dist_sq(&w, &x);
                if s < best.0 {
                    best = (s, w);
                }
            }
            prox_matches_mesh(&g, &x, &best.1)?;
            cases += 1;
        }
    }

    let q = vec![0.2, 0.05, 0.0, 0.05, 0.25, 0.05, 0.0, 0.05, 0.1];
    let g = QuadraticPenalty::new(q, vec![0.3, -0.2, 0.1]).unwrap();
    for _ in 0..5 {
        let x = random_centi_point(&mut rng, 3);
        let score = |w: &[f64]| g.value(w) + 0.5 * linalg::dist_sq(w, &x);
        let coarse = mesh_argmin(3, &centi_mesh(-40, 40).iter().map(|v| v * 10.0).collect::<Vec<_>>(), &score);
        let mut best = (f64::INFINITY, vec![]);
        for a in -20..=20 {
            for b in -20..=20 {
                for c in -20..=20 {
                    let w = [
                        coarse[0] + a as f64 / 100.0,
                        coarse[1] + b as f64 / 100.0,
                        coarse[2] + c as f64 / 100.0,
                    ];
                    let s = score(&w);
                    if s < best.0 {
                        best = (s, w.to_vec());
                    }
                }
            }
        }
        prox_matches_mesh(&g, &x, &best.1)?;
        cases += 1;
    }
    Ok(cases)
}

/// Critical points of `f_v` on the union of the axes, found without the
/// closed form: the origin plus the stationary point of each axis
/// restriction, located from three function values of the (quadratic)
/// restriction.
pub fn brute_force_bad(f: &dyn Objective, set: &SparseSet, v: [f64; 2]) -> bool {
    let fv = Perturbed::new(f, Perturbation::Linear(v.to_vec())).unwrap();
    let mut candidates = vec![[0.0, 0.0]];
    for axis in 0..2 {
        let at = |t: f64| {
            let mut x = [0.0, 0.0];
            x[axis] = t;
            fv.value(&x)
        };
        let (fm, f0, fp) = (at(-1.0), at(0.0), at(1.0));
        let slope = (fp - fm) / 2.0;
        let curvature = fp - 2.0 * f0 + fm;
        let mut x = [0.0, 0.0];
        x[axis] = -slope / curvature;
        candidates.push(x);
    }
    candidates.iter().any(|x| {
        let critical = criticality_test(&fv, set, x, 1e-7).unwrap();
        let residual = frechet_residual(&fv, set, x).unwrap();
        critical && residual > 1e-6
    })
}

/// Oracle against classifier on the 601^2 mesh of `[-3, 3]^2`; returns the
/// number of bad mesh points.
pub fn bad_set_mesh_agreement() -> Check<usize> {
    let f = Quadratic::sparse_example();
    let set = SparseSet::new(2, 1).unwrap();
    let mut bad = 0;
    for i in -300..=300 {
        for j in -300..=300 {
            let v = [i as f64 / 100.0, j as f64 / 100.0];
            let oracle = sparse_quadratic_bad_set_oracle(&v);
            if oracle != brute_force_bad(&f, &set, v) {
                return Err(format!("oracle and classifier disagree at v = {v:?}"));
            }
            bad += oracle as usize;
        }
    }
    Ok(bad)
}

/// Least squares on the columns `cols`: thin QR by Gram-Schmidt with one
/// reorthogonalization pass, then back substitution.
fn least_squares(rays: &[Vec<f64>], cols: &[usize], x: &[f64]) -> Vec<f64> {
    let n = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = vec![vec![0.0; n]; n];
    for (c, &i) in cols.iter().enumerate() {
        let mut v = rays[i].clone();
        for _ in 0..2 {
            for (k, qk) in q.iter().enumerate() {
                let h = linalg::dot(qk, &v);
                r[k][c] += h;
                v = linalg::axpy(&v, -h, qk);
            }
        }
        r[c][c] = linalg::norm(&v);
        q.push(linalg::scale(&v, 1.0 / r[c][c]));
    }
    let qtx: Vec<f64> = q.iter().map(|qk| linalg::dot(qk, x)).collect();
    let mut s = vec![0.0; n];
    for c in (0..n).rev() {
        let tail: f64 = (c + 1..n).map(|k| r[c][k] * s[k]).sum();
        s[c] = (qtx[c] - tail) / r[c][c];
    }
    s
}

/// `dist(x, N) = ||proj_K(x)||` with `K` the convex cone generated by the
/// rays (Moreau). The projection onto `K` comes from nonnegative least
/// squares solved by the Lawson-Hanson active set method.
pub fn polar_distance_nnls(rays: &[Vec<f64>], x: &[f64]) -> f64 {
    let m = rays.len();
    let mut lam = vec![0.0; m];
    let mut passive: Vec<usize> = Vec::new();
    let combine = |lam: &[f64]| {
        let mut p = vec![0.0; x.len()];
        for (l, z) in lam.iter().zip(rays) {
            p = linalg::axpy(&p, *l, z);
        }
        p
    };
    for _ in 0..10 * m + 10 {
        let r = linalg::sub(x, &combine(&lam));
        let next = (0..m)
            .filter(|j| !passive.contains(j))
            .map(|j| (j, linalg::dot(&rays[j], &r)))
            .filter(|&(_, w)| w > 1e-12)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((j, _)) = next else { break };
        passive.push(j);
        loop {
            let s = least_squares(rays, &passive, x);
            if s.iter().all(|&v| v > 0.0) {
                for (&i, &v) in passive.iter().zip(&s) {
                    lam[i] = v;
                }
                break;
            }
            let alpha = passive
                .iter()
                .zip(&s)
                .filter(|(_, &v)| v <= 0.0)
                .map(|(&i, &v)| lam[i] / (lam[i] - v))
                .fold(f64::INFINITY, f64::min);
            for (&i, &v) in passive.iter().zip(&s) {
                lam[i] += alpha * (v - lam[i]);
            }
            passive.retain(|&i| lam[i] > 1e-14);
            for (i, l) in lam.iter_mut().enumerate() {
                if !passive.contains(&i) {
                    *l = 0.0;
                }
            }
        }
    }
    linalg::norm(&combine(&lam))
}

/// Random ray families in dims 2 to 4: the inequality holds and the
/// enumerated right-hand side equals the NNLS distance.
pub fn polar_instances(count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..count {
        let dim = rng.random_range(2..=4);
        let m = rng.random_range(1..=6);
        let rays: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let pts: Vec<Point> = rays.iter().map(|r| Point::from_slice(r).unwrap()).collect();
        let check = polar_cone_inequality_check(&pts, &x).map_err(|e| e.to_string())?;
        if check.lhs > check.rhs + 1e-9 || !check.ok {
            return Err(format!("instance {n}: lhs {} > rhs {}", check.lhs, check.rhs));
        }
        let oracle = polar_distance_nnls(&rays, &x);
        if (check.rhs - oracle).abs() >= 1e-9 {
            return Err(format!("instance {n}: rhs {} vs nnls {oracle}", check.rhs));
        }
    }
    Ok(())
}

pub fn builtin_objectives(base: &Quadratic) -> Vec<(&'static str, Box<dyn Objective + '_>)> {
    let general = Quadratic::new(vec![2.0, -1.0, 0.5, -1.0, 3.0, 0.0, 0.5, 0.0, -1.0], vec![1.0, 0.0, -2.0], 0.5)
        .unwrap();
    let linear = Perturbed::new(base, Perturbation::Linear(vec![0.3, -0.7])).unwrap();
    let quad = Perturbed::new(base, Perturbation::Quadratic { epsilon: 0.2, center: vec![1.0, -1.0] }).unwrap();
    vec![
        ("sparse example", Box::new(Quadratic::sparse_example())),
        ("half squared distance", Box::new(Quadratic::half_squared_distance(&[0.3, 0.7]).unwrap())),
        ("diagonal", Box::new(Quadratic::diagonal(&[1.0, 4.0, 0.5], &[1.0, -1.0, 2.0]).unwrap())),
        ("general indefinite", Box::new(general)),
        ("linear perturbation", Box::new(linear)),
        ("quadratic perturbation", Box::new(quad)),
    ]
}

/// Central differences against analytic gradients at 100 random points of
/// `[-5, 5]^p` per built-in objective; returns the worst deviation.
pub fn gradients_match_finite_differences(seed: u64) -> Check<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Quadratic::sparse_example();
    let mut worst = 0.0f64;
    for (name, f) in builtin_objectives(&base) {
        for _ in 0..100 {
            let x: Vec<f64> = (0..f.dim()).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = Point::new(x).unwrap();
            let fd = finite_diff_gradient(f.as_ref(), &x, 1e-5).map_err(|e| e.to_string())?;
            let err = linalg::max_abs_diff(&fd, &f.gradient(&x));
            worst = worst.max(err);
            if err > 1e-6 {
                return Err(format!("{name} at {x:?}: deviation {err:e}"));
            }
        }
    }
    Ok(worst)
}
