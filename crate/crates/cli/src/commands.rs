use std::path::PathBuf;

use frechet_core::diagnostics::{
    fixed_point_uniqueness, quantitative_certificate, stationarity_report, Certificate, ReportOptions,
};
use frechet_core::genericity::{sparse_quadratic_model, PerturbationExperiment, PerturbationMode, SweepReport};
use frechet_core::linalg;
use frechet_core::sets::GridSet;
use frechet_core::{ConstraintSet, Objective, Point, StopReason};

use crate::config::{BuiltObjective, Command, Feasible, RunConfig};
use crate::driver::{self, Run};
use crate::error::{CliError, CliResult};
use crate::output::{self, num, opt_num, palette, Canvas, Report, Table};

/// Files written by a command plus a short human summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub fn execute(cfg: &RunConfig) -> CliResult<Outcome> {
    match cfg.command {
        Command::SparseDemo => sparse_demo(cfg),
        Command::GridDemo => grid_demo(cfg),
        Command::Genericity => genericity(cfg),
        Command::Solve => solve(cfg),
    }
}

fn coord_header(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (1..=dim).map(move |i| format!("{prefix}{i}"))
}

fn point_text(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|&c| num(c)).collect();
    format!("({})", parts.join(","))
}

/// `run_id,iter,x1,x2,...,f,residual`.
pub fn trajectories_table(runs: &[Run], dim: usize) -> Table {
    let mut header = vec!["run_id".to_string(), "iter".to_string()];
    header.extend(coord_header("x", dim));
    header.push("f".into());
    header.push("residual".into());
    let mut t = Table::new(header);
    for run in runs {
        let trace = run.result.trace.as_ref().expect("demo runs record traces");
        for (k, x) in trace.iterates.iter().enumerate() {
            let mut row = vec![run.id.to_string(), k.to_string()];
            row.extend(x.iter().map(|&c| num(c)));
            row.push(num(trace.values[k]));
            row.push(opt_num(trace.residuals[k]));
            t.push(row);
        }
    }
    t
}

fn run_lines(report: &mut Report, runs: &[Run]) {
    for r in runs {
        report.kv(
            &format!("run.{}", r.id),
            format!(
                "gamma={} x0={} limit={} iterations={} stop={}",
                num(r.gamma),
                point_text(&r.x0),
                point_text(&r.result.final_point),
                r.result.iterations_used,
                r.result.stop_reason.as_str()
            ),
        );
    }
}

fn require_2d(dim: usize, what: &str) -> CliResult<()> {
    if dim != 2 {
        return Err(CliError::Config(format!("{what} is drawn in the plane and needs dimension 2, got {dim}")));
    }
    Ok(())
}

/// Tolerance on the sparse demo limits.
pub const SPARSE_LIMIT_TOL: f64 = 1e-6;

pub struct SparseDemo {
    pub objective: BuiltObjective,
    pub set: Box<dyn ConstraintSet>,
    pub runs: Vec<Run>,
}

pub fn sparse_demo_runs(cfg: &RunConfig) -> CliResult<SparseDemo> {
    let objective = cfg.objective()?;
    let set = cfg.set.build_set(objective.dim())?;
    let inits = cfg.init_points()?;
    let runs = driver::run_grid_of_starts(&objective, set.as_ref(), &cfg.gammas, &inits, &cfg.solver)?;
    Ok(SparseDemo { objective, set, runs })
}

fn sparse_demo(cfg: &RunConfig) -> CliResult<Outcome> {
    let demo = sparse_demo_runs(cfg)?;
    output::ensure_dir(&cfg.out_dir)?;
    let traj = output::out_path(&cfg.out_dir, "trajectories.csv");
    trajectories_table(&demo.runs, 2).write(&traj)?;
    let svg = output::out_path(&cfg.out_dir, "sparse_demo.svg");
    output::write_text(&svg, &sparse_svg(&demo))?;

    let target = [1.0, 0.0];
    let misses: Vec<&Run> = demo
        .runs
        .iter()
        .filter(|r| linalg::max_abs_diff(&r.result.final_point, &target) > SPARSE_LIMIT_TOL)
        .collect();
    let mut report = Report::default();
    report.kv("command", "sparse-demo");
    report.kv("runs", demo.runs.len());
    report.kv("limits_at_global_minimum", demo.runs.len() - misses.len());
    run_lines(&mut report, &demo.runs);
    let rep = output::out_path(&cfg.out_dir, "report.txt");
    report.write(&rep)?;

    if let Some(r) = misses.first() {
        return Err(CliError::Assertion(format!(
            "{} of {} runs did not reach (1,0); run {} stopped at {}",
            misses.len(),
            demo.runs.len(),
            r.id,
            point_text(&r.result.final_point)
        )));
    }
    Ok(Outcome {
        files: vec![traj, svg, rep],
        summary: format!("{} runs, all limits at (1,0)", demo.runs.len()),
    })
}

fn sparse_svg(demo: &SparseDemo) -> String {
    let mut lo = [-0.5f64, -0.5];
    let mut hi = [1.5f64, 0.5];
    for r in &demo.runs {
        for x in &r.result.trace.as_ref().unwrap().iterates {
            for i in 0..2 {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
    }
    let pad = 0.1 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let (xmin, xmax, ymin, ymax) = (lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad);
    let mut c = Canvas::new(xmin, xmax, ymin, ymax);
    let big = 10.0 * (xmax - xmin + ymax - ymin);
    c.line((-big, 0.0), (big, 0.0), r#"stroke="black" stroke-width="4""#);
    c.line((0.0, -big), (0.0, big), r#"stroke="black" stroke-width="4""#);
    for r in &demo.runs {
        let color = palette(r.id);
        let trace = r.result.trace.as_ref().unwrap();
        for w in trace.iterates.windows(2) {
            let g = demo.objective.gradient(&w[0]);
            let step = linalg::axpy(&w[0], -r.gamma, &g);
            c.line((w[0][0], w[0][1]), (step[0], step[1]), &format!(r#"stroke="{color}" stroke-width="1.5""#));
            c.line(
                (step[0], step[1]),
                (w[1][0], w[1][1]),
                &format!(r#"stroke="{color}" stroke-width="1.5" stroke-dasharray="4,3""#),
            );
        }
        let x0 = &trace.iterates[0];
        c.circle((x0[0], x0[1]), 4.0, &format!(r#"fill="{color}""#));
    }
    c.circle((1.0, 0.0), 6.0, r#"fill="none" stroke="black" stroke-width="2""#);
    c.label(20.0, 30.0, "solid: gradient step, dashed: projection step");
    c.finish()
}

/// Per grid point: objective value and certificate over the full grid.
pub struct GridPointInfo {
    pub point: Point,
    pub value: f64,
    pub certificate: Certificate,
}

pub struct LimitInfo {
    pub point: Point,
    pub certificate_ok: bool,
    pub unique: bool,
    pub reached_by: usize,
}

pub struct GridDemo {
    pub objective: BuiltObjective,
    pub grid: GridSet,
    pub gamma: f64,
    pub points: Vec<GridPointInfo>,
    pub runs: Vec<Run>,
    pub limits: Vec<LimitInfo>,
}

impl GridDemo {
    /// Grid points failing the certificate that no run ends at.
    pub fn unreached_violators(&self) -> Vec<&GridPointInfo> {
        self.points
            .iter()
            .filter(|p| !p.certificate.ok)
            .filter(|p| !self.limits.iter().any(|l| linalg::max_abs_diff(&l.point, &p.point) <= 1e-9))
            .collect()
    }
}

/// Probe steps at the limits, as fractions of gamma.
pub const PROBE_FRACTIONS: [f64; 3] = [0.2, 0.5, 0.9];

pub fn grid_demo_data(cfg: &RunConfig) -> CliResult<GridDemo> {
    let objective = cfg.objective()?;
    if cfg.set.kind() != "grid" {
        return Err(CliError::Config(format!("grid-demo needs a grid set, got {:?}", cfg.set.kind())));
    }
    let s = &cfg.set;
    let grid = GridSet::new(
        s.spacing.ok_or_else(|| CliError::Config("[set] needs `spacing`".into()))?,
        s.lower.clone().ok_or_else(|| CliError::Config("[set] needs `lower`".into()))?,
        s.upper.clone().ok_or_else(|| CliError::Config("[set] needs `upper`".into()))?,
    )?;
    require_2d(grid.dim(), "grid-demo")?;
    if objective.dim() != 2 {
        return Err(CliError::Config("grid-demo needs a two dimensional objective".into()));
    }
    if cfg.gammas.len() != 1 {
        return Err(CliError::Config("grid-demo takes exactly one step size".into()));
    }
    let gamma = cfg.gammas[0];
    frechet_core::SolverConfig::with_gamma(gamma).step_size(objective.lipschitz_bound())?;

    let all: Vec<Point> = grid.points().collect();
    let points = all
        .iter()
        .map(|p| {
            let certificate = quantitative_certificate(&objective, &grid, p, gamma, &all)?;
            Ok(GridPointInfo { point: p.clone(), value: objective.value(p), certificate })
        })
        .collect::<CliResult<Vec<_>>>()?;

    // Mesh starts are snapped onto the grid before running.
    let inits = cfg
        .init_points()?
        .iter()
        .map(|x| grid.project_one(x).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;
    let runs = driver::run_grid_of_starts(&objective, &grid, &[gamma], &inits, &cfg.solver)?;

    let mut limits: Vec<LimitInfo> = Vec::new();
    for r in &runs {
        let p = &r.result.final_point;
        if let Some(l) = limits.iter_mut().find(|l| linalg::max_abs_diff(&l.point, p) <= 1e-9) {
            l.reached_by += 1;
            continue;
        }
        let info = points
            .iter()
            .find(|q| linalg::max_abs_diff(&q.point, p) <= 1e-9)
            .ok_or_else(|| CliError::Numeric(format!("limit {} is not a grid point", point_text(p))))?;
        let probes: Vec<f64> = PROBE_FRACTIONS.iter().map(|f| f * gamma).collect();
        let unique = fixed_point_uniqueness(&objective, &grid, p, gamma, &probes)?;
        limits.push(LimitInfo { point: p.clone(), certificate_ok: info.certificate.ok, unique, reached_by: 1 });
    }
    limits.sort_by(|a, b| a.point.coords().partial_cmp(b.point.coords()).unwrap());
    Ok(GridDemo { objective, grid, gamma, points, runs, limits })
}

fn grid_demo(cfg: &RunConfig) -> CliResult<Outcome> {
    let demo = grid_demo_data(cfg)?;
    output::ensure_dir(&cfg.out_dir)?;
    let mut t = Table::new(["x1", "x2", "f", "certificate_flag"]);
    for p in &demo.points {
        t.push(vec![num(p.point[0]), num(p.point[1]), num(p.value), p.certificate.ok.to_string()]);
    }
    let gp = output::out_path(&cfg.out_dir, "grid_points.csv");
    t.write(&gp)?;
    let traj = output::out_path(&cfg.out_dir, "trajectories.csv");
    trajectories_table(&demo.runs, 2).write(&traj)?;
    let svg = output::out_path(&cfg.out_dir, "grid_demo.svg");
    output::write_text(&svg, &grid_svg(&demo))?;

    let violators = demo.points.iter().filter(|p| !p.certificate.ok).count();
    let unreached = demo.unreached_violators().len();
    let factor = if demo.objective.is_convex() { "1/(2 gamma)" } else { "1/gamma" };
    let mut report = Report::default();
    report.kv("command", "grid-demo");
    report.kv("gamma", num(demo.gamma));
    report.kv("convex", demo.objective.is_convex());
    report.kv("certificate_factor", factor);
    report.kv("grid_points", demo.points.len());
    report.kv("certificate_violations", violators);
    report.kv("violations_never_reached", unreached);
    report.kv("runs", demo.runs.len());
    report.kv("distinct_limits", demo.limits.len());
    for (i, l) in demo.limits.iter().enumerate() {
        report.kv(
            &format!("limit.{i}"),
            format!(
                "point={} reached_by={} certificate={} unique_projection={}",
                point_text(&l.point),
                l.reached_by,
                l.certificate_ok,
                l.unique
            ),
        );
    }
    run_lines(&mut report, &demo.runs);
    let rep = output::out_path(&cfg.out_dir, "report.txt");
    report.write(&rep)?;

    if let Some(l) = demo.limits.iter().find(|l| !l.certificate_ok) {
        return Err(CliError::Assertion(format!("limit {} fails the quantitative estimate", point_text(&l.point))));
    }
    if let Some(l) = demo.limits.iter().find(|l| !l.unique) {
        return Err(CliError::Assertion(format!("projection at limit {} is not unique", point_text(&l.point))));
    }
    Ok(Outcome {
        files: vec![gp, traj, svg, rep],
        summary: format!(
            "{} runs, {} distinct limits, all certified; {violators} grid points fail the estimate ({unreached} never reached)",
            demo.runs.len(),
            demo.limits.len()
        ),
    })
}

/// Level sets `f = f_min + t` of a convex 2-D quadratic as closed polylines.
fn contours(q: &frechet_core::Quadratic, levels: &[f64]) -> Option<Vec<Vec<(f64, f64)>>> {
    let h = q.hessian();
    let (a, b, d) = (h[0], h[1], h[3]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l1, l2) = (mean + rad, mean - rad);
    if l2 <= 1e-12 {
        return None;
    }
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    let (u, v) = ((theta.cos(), theta.sin()), (-theta.sin(), theta.cos()));
    let m = q.minimizer().ok()?;
    Some(
        levels
            .iter()
            .map(|&t| {
                let (r1, r2) = ((2.0 * t / l1).sqrt(), (2.0 * t / l2).sqrt());
                (0..=96)
                    .map(|k| {
                        let phi = std::f64::consts::TAU * k as f64 / 96.0;
                        let (c, s) = (r1 * phi.cos(), r2 * phi.sin());
                        (m[0] + c * u.0 + s * v.0, m[1] + c * u.1 + s * v.1)
                    })
                    .collect()
            })
            .collect(),
    )
}

fn grid_svg(demo: &GridDemo) -> String {
    let (lo, hi) = (demo.grid.lower(), demo.grid.upper());
    let pad = 0.5 * demo.grid.spacing();
    let mut c = Canvas::new(lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad);
    let q = &demo.objective.quadratic;
    let f_min = q.minimizer().map(|m| q.value(&m)).unwrap_or(0.0);
    let t_max = demo.points.iter().map(|p| p.value - f_min).fold(0.0, f64::max);
    let levels: Vec<f64> = (1..=8).map(|j| t_max * (j as f64 / 8.0).powi(2)).collect();
    if let Some(rings) = contours(q, &levels) {
        for ring in rings {
            c.polyline(&ring, r##"stroke="#999999" stroke-width="1""##);
        }
    }
    for r in &demo.runs {
        let pts: Vec<(f64, f64)> =
            r.result.trace.as_ref().unwrap().iterates.iter().map(|x| (x[0], x[1])).collect();
        c.polyline(&pts, &format!(r#"stroke="{}" stroke-width="0.8" stroke-opacity="0.5""#, palette(r.id)));
    }
    for p in &demo.points {
        let at = (p.point[0], p.point[1]);
        if p.certificate.ok {
            c.circle(at, 5.0, r#"fill="black""#);
        } else {
            c.square(at, 9.0, r#"fill="white" stroke="red" stroke-width="2""#);
        }
    }
    for l in &demo.limits {
        c.circle((l.point[0], l.point[1]), 9.0, r#"fill="none" stroke="blue" stroke-width="2""#);
    }
    c.label(20.0, 30.0, "dots: estimate holds, squares: estimate fails, rings: limits");
    c.finish()
}

fn is_default_sparse_instance(cfg: &RunConfig) -> bool {
    cfg.problem.kind.as_deref().unwrap_or("sparse-example") == "sparse-example"
        && cfg.set.kind() == "sparse"
        && cfg.set.dim.unwrap_or(2) == 2
        && cfg.set.k == Some(1)
}

pub fn genericity_report(cfg: &RunConfig) -> CliResult<SweepReport> {
    let objective = cfg.objective()?;
    let set = cfg.set.build_set(objective.dim())?;
    let mut exp = PerturbationExperiment::new(&objective, set.as_ref(), cfg.init_points()?);
    exp.count = cfg.sweep.count;
    exp.radius = cfg.sweep.radius;
    exp.seed = cfg.seed;
    exp.forced = cfg.sweep.forced.clone();
    exp.solver = frechet_core::SolverConfig { gamma: Some(cfg.gammas[0]), record_trace: false, ..cfg.solver.clone() };
    exp.frechet_tol = cfg.sweep.frechet_tol;
    exp.critical_tol = cfg.sweep.critical_tol;
    if let Some(epsilon) = cfg.sweep.quadratic_epsilon {
        exp.mode = PerturbationMode::Quadratic { epsilon };
    } else if is_default_sparse_instance(cfg) {
        exp.analytic = Some(sparse_quadratic_model());
    }
    driver::parallel_sweep(&exp)
}

fn genericity(cfg: &RunConfig) -> CliResult<Outcome> {
    let report = genericity_report(cfg)?;
    output::ensure_dir(&cfg.out_dir)?;
    let dim = report.records.first().map_or(0, |r| r.v.len());
    let mut header = vec!["sample_index".to_string()];
    header.extend(coord_header("v", dim));
    header.extend(coord_header("x", dim));
    header.extend(["residual", "critical_flag", "frechet_flag", "near_degenerate_flag"].map(String::from));
    let mut t = Table::new(header);
    for r in &report.records {
        for p in &r.points {
            let mut row = vec![r.index.to_string()];
            row.extend(r.v.iter().map(|&c| num(c)));
            row.extend(p.point.iter().map(|&c| num(c)));
            row.push(num(p.residual));
            row.push(p.critical.to_string());
            row.push(p.frechet.to_string());
            row.push(r.near_degenerate.to_string());
            t.push(row);
        }
    }
    let sweep = output::out_path(&cfg.out_dir, "sweep.csv");
    t.write(&sweep)?;

    let mut rep = Report::default();
    rep.kv("command", "genericity");
    rep.kv("seed", cfg.seed);
    rep.kv("rng", "ChaCha8 (stream = sample index)");
    rep.kv("samples", report.records.len());
    rep.kv("random_samples", cfg.sweep.count);
    rep.kv("forced_samples", cfg.sweep.forced.len());
    rep.kv("radius", num(cfg.sweep.radius));
    rep.kv("mode", cfg.sweep.quadratic_epsilon.map_or("linear".to_string(), |e| format!("quadratic epsilon={}", num(e))));
    rep.kv("critical_points", if is_default_sparse_instance(cfg) && cfg.sweep.quadratic_epsilon.is_none() {
        "solver limits plus analytic enumeration"
    } else {
        "solver limits only"
    });
    rep.kv("bad_count", report.bad_count);
    rep.kv("near_degenerate_count", report.near_degenerate_count);
    rep.kv("numeric_error_count", report.numeric_error_count);
    let bad: Vec<String> = report.bad_indices().iter().map(|i| i.to_string()).collect();
    rep.kv("bad_indices", bad.join(","));
    let path = output::out_path(&cfg.out_dir, "report.txt");
    rep.write(&path)?;

    let summary = format!(
        "{} samples, bad count {}, near-degenerate {}, numeric errors {}, seed {}",
        report.records.len(),
        report.bad_count,
        report.near_degenerate_count,
        report.numeric_error_count,
        cfg.seed
    );
    if report.bad_count > 0 {
        return Err(CliError::Assertion(format!("{summary}; bad samples {}", bad.join(","))));
    }
    Ok(Outcome { files: vec![sweep, path], summary })
}

pub fn solve_run(cfg: &RunConfig) -> CliResult<(BuiltObjective, Feasible, Run)> {
    let objective = cfg.objective()?;
    let feasible = cfg.set.build(objective.dim())?;
    let inits = cfg.init_points()?;
    if inits.len() != 1 {
        return Err(CliError::Config(format!("solve takes exactly one initial point, got {}", inits.len())));
    }
    let gamma = cfg.gammas[0];
    let run = match &feasible {
        Feasible::Set(set) => {
            let mut runs = driver::run_grid_of_starts(&objective, set.as_ref(), &[gamma], &inits, &cfg.solver)?;
            runs.remove(0)
        }
        Feasible::Penalty(g) => driver::run_prox(&objective, g.as_ref(), gamma, &inits[0], &cfg.solver)?,
    };
    Ok((objective, feasible, run))
}

fn solve(cfg: &RunConfig) -> CliResult<Outcome> {
    let (objective, feasible, run) = solve_run(cfg)?;
    let res = &run.result;
    let trace = res.trace.as_ref().expect("solve records a trace");
    let dim = objective.dim();
    output::ensure_dir(&cfg.out_dir)?;

    let mut header = vec!["iter".to_string(), "F".to_string(), "increment".to_string()];
    header.extend(["residual", "subdiff_bound"].map(String::from));
    header.extend(coord_header("x", dim));
    let mut t = Table::new(header);
    for (k, x) in trace.iterates.iter().enumerate() {
        let mut row = vec![k.to_string(), num(trace.values[k])];
        let step = k.checked_sub(1);
        row.push(opt_num(step.map(|s| trace.increments[s])));
        row.push(opt_num(trace.residuals[k]));
        row.push(opt_num(step.map(|s| trace.subdiff_dist_bounds[s])));
        row.extend(x.iter().map(|&c| num(c)));
        t.push(row);
    }
    let trace_path = output::out_path(&cfg.out_dir, "trace.csv");
    t.write(&trace_path)?;

    let mut rep = Report::default();
    rep.kv("command", "solve");
    rep.kv("problem", &objective.label);
    rep.kv("set", cfg.set.kind());
    rep.kv("stop_reason", res.stop_reason.as_str());
    rep.kv("iterations", res.iterations_used);
    rep.kv("gamma", num(res.gamma));
    rep.kv("delta", num(res.delta));
    rep.kv("final_value", num(res.final_value));
    rep.kv("final_point", point_text(&res.final_point));
    rep.kv("final_residual", opt_num(res.final_residual));
    rep.kv("descent_margin", num(trace.min_descent_margin(res.gamma, objective.lipschitz_bound())));
    if let Feasible::Set(set) = &feasible {
        let opts = ReportOptions { frechet_tol: cfg.solver.residual_tol, gamma: Some(res.gamma), ..ReportOptions::default() };
        let s = stationarity_report(&objective, set.as_ref(), &res.final_point, &opts)?;
        rep.kv("frechet_residual", opt_num(s.frechet_residual));
        rep.kv("is_frechet", s.is_frechet.map(|b| b.to_string()).unwrap_or_default());
        rep.kv("is_critical", s.is_critical.map(|b| b.to_string()).unwrap_or_default());
        match &s.quantitative {
            Some(q) => {
                rep.kv("quantitative_ok", q.ok);
                rep.kv("worst_violation", num(q.worst_violation));
                rep.kv("worst_witness", point_text(&q.worst_witness));
                rep.kv("certificate_factor", num(q.factor));
                rep.kv("witness_strategy", &q.witness_strategy);
            }
            None => rep.kv("quantitative_ok", ""),
        }
        match &s.fixed_point_unique {
            Some(u) => {
                rep.kv("fixed_point_unique", u.unique);
                let probed: Vec<String> = u.probed.iter().map(|&v| num(v)).collect();
                rep.kv("probed_s", probed.join(","));
            }
            None => rep.kv("fixed_point_unique", ""),
        }
    }
    let rep_path = output::out_path(&cfg.out_dir, "report.txt");
    rep.write(&rep_path)?;

    let mut summary = format!(
        "stop_reason={} after {} iterations at {}",
        res.stop_reason.as_str(),
        res.iterations_used,
        point_text(&res.final_point)
    );
    if res.stop_reason == StopReason::MaxIters {
        summary.push_str(" (iteration limit reached)");
    }
    Ok(Outcome { files: vec![trace_path, rep_path], summary })
}
