//! Run configuration: a TOML file with sections `[problem]`, `[set]`,
//! `[solver]`, `[sweep]` and `[output]`, overridden by command line flags.
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use frechet_core::objective::Quadratic;
use frechet_core::prox::{L0Penalty, QuadraticPenalty};
use frechet_core::sets::{BoxSet, FinitePointSet, GridSet, RankBoundedSet, SparseSet};
use frechet_core::{ConstraintSet, Objective, Point, ProxOperator, SolverConfig};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "frechet", version, about = "Projected gradient experiments on nonconvex sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Projected gradient on (x-1)^2 + y^2 over the 1-sparse vectors of R^2.
    SparseDemo,
    /// Projected gradient over a grid, with quantitative certificates.
    GridDemo,
    /// Random linear perturbation sweep.
    Genericity,
    /// A single solve with a full trace.
    Solve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SparseDemo => "sparse-demo",
            Command::GridDemo => "grid-demo",
            Command::Genericity => "genericity",
            Command::Solve => "solve",
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Step size; repeat for several runs.
    #[arg(long, global = true, value_name = "F", allow_negative_numbers = true)]
    pub gamma: Vec<f64>,
    /// Initial point as "x1,x2,..."; repeatable.
    #[arg(long, global = true, value_name = "X", allow_hyphen_values = true)]
    pub init: Vec<String>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Extra perturbation vector "v1,v2,..." evaluated by the sweep.
    #[arg(long = "force-v", global = true, value_name = "V", allow_hyphen_values = true)]
    pub force_v: Vec<String>,
    #[arg(long = "max-iters", global = true, value_name = "N")]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<ProblemSection>,
    pub set: Option<SetSection>,
    pub solver: Option<SolverSection>,
    pub sweep: Option<SweepSection>,
    pub output: Option<OutputSection>,
}

/// Smooth objective. `kind` is one of `sparse-example`,
/// `half-squared-distance` (needs `center`), `diagonal` (`weights`,
/// `center`) or `quadratic` (`hessian` row-major, `linear`, `constant`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: Option<String>,
    pub center: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub hessian: Option<Vec<f64>>,
    pub linear: Option<Vec<f64>>,
    pub constant: Option<f64>,
    /// `false` forces the nonconvex form of the certificate.
    pub convex: Option<bool>,
}

/// Constraint set or penalty. `kind` is one of `sparse` (`dim`, `k`),
/// `grid` (`spacing`, `lower`, `upper`), `box` (`lower`, `upper`),
/// `finite` (`points`), `rank` (`rows`, `cols`, `rank`), `l0` (`dim`,
/// `lambda`), `quadratic-penalty` (`q`, `b`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSection {
    pub kind: Option<String>,
    pub dim: Option<usize>,
    pub k: Option<usize>,
    pub spacing: Option<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub points: Option<Vec<Vec<f64>>>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub rank: Option<usize>,
    pub lambda: Option<f64>,
    pub q: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub gamma: Option<Vec<f64>>,
    pub max_iters: Option<usize>,
    pub increment_tol: Option<f64>,
    pub residual_tol: Option<f64>,
    pub stop_on_residual: Option<bool>,
    pub inits: Option<Vec<Vec<f64>>>,
    pub init_mesh: Option<MeshSpec>,
}

/// `count` evenly spaced values per axis between `lower` and `upper`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub count: Option<usize>,
    pub radius: Option<f64>,
    pub seed: Option<u64>,
    /// `linear` or `quadratic`.
    pub mode: Option<String>,
    pub epsilon: Option<f64>,
    pub force_v: Option<Vec<Vec<f64>>>,
    pub frechet_tol: Option<f64>,
    pub critical_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn parse_vector(text: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("invalid vector {text:?}: {e}")))?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err(CliError::Config(format!("vector {text:?} has non-finite entries")));
    }
    Ok(v)
}

/// Initial points, either listed or a tensor mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum Inits {
    List(Vec<Vec<f64>>),
    Mesh(MeshSpec),
}

impl Inits {
    pub fn points(&self) -> CliResult<Vec<Vec<f64>>> {
        match self {
            Inits::List(v) => Ok(v.clone()),
            Inits::Mesh(m) => {
                if m.lower.len() != m.upper.len() || m.lower.is_empty() {
                    return Err(CliError::Config("init_mesh bounds must have equal, positive length".into()));
                }
                if m.count == 0 {
                    return Err(CliError::Config("init_mesh count must be positive".into()));
                }
                let axes: Vec<Vec<f64>> = m
                    .lower
                    .iter()
                    .zip(&m.upper)
                    .map(|(lo, hi)| {
                        if m.count == 1 {
                            vec![0.5 * (lo + hi)]
                        } else {
                            (0..m.count).map(|i| lo + (hi - lo) * i as f64 / (m.count - 1) as f64).collect()
                        }
                    })
                    .collect();
                let mut out = vec![vec![]];
                for axis in &axes {
                    out = out
                        .into_iter()
                        .flat_map(|p: Vec<f64>| {
                            axis.iter().map(move |&t| {
                                let mut q = p.clone();
                                q.push(t);
                                q
                            })
                        })
                        .collect();
                }
                Ok(out)
            }
        }
    }
}

/// Settings of the perturbation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub count: usize,
    pub radius: f64,
    pub quadratic_epsilon: Option<f64>,
    pub forced: Vec<Vec<f64>>,
    pub frechet_tol: f64,
    pub critical_tol: f64,
}

/// Fully resolved configuration of one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemSection,
    pub set: SetSection,
    pub gammas: Vec<f64>,
    pub inits: Inits,
    pub solver: SolverConfig,
    pub sweep: SweepSettings,
    pub seed: u64,
    pub out_dir: PathBuf,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "frechet-output";

fn sparse_problem() -> ProblemSection {
    ProblemSection { kind: Some("sparse-example".into()), ..Default::default() }
}

fn sparse_set() -> SetSection {
    SetSection { kind: Some("sparse".into()), dim: Some(2), k: Some(1), ..Default::default() }
}

impl RunConfig {
    /// Command defaults, then the file, then the flags.
    pub fn resolve(command: Command, file: FileConfig, flags: &Flags) -> CliResult<Self> {
        let (problem, set, gammas, inits) = match command {
            Command::SparseDemo => {
                if file.problem.is_some() || file.set.is_some() {
                    return Err(CliError::Config("sparse-demo runs a fixed instance; remove [problem] and [set]".into()));
                }
                let inits = vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![-2.0, 0.0]];
                (sparse_problem(), sparse_set(), vec![0.1, 0.25, 0.45], Inits::List(inits))
            }
            Command::GridDemo => {
                let problem = ProblemSection {
                    kind: Some("half-squared-distance".into()),
                    center: Some(vec![0.3, 0.7]),
                    ..Default::default()
                };
                let set = SetSection {
                    kind: Some("grid".into()),
                    spacing: Some(1.0),
                    lower: Some(vec![-3.0, -3.0]),
                    upper: Some(vec![3.0, 3.0]),
                    ..Default::default()
                };
                let mesh = MeshSpec { lower: vec![-3.0, -3.0], upper: vec![3.0, 3.0], count: 20 };
                (problem, set, vec![0.5], Inits::Mesh(mesh))
            }
            Command::Genericity => {
                let inits = frechet_core::genericity::sparse_sweep_inits().into_iter().map(Point::into_vec).collect();
                (sparse_problem(), sparse_set(), vec![0.25], Inits::List(inits))
            }
            Command::Solve => {
                let problem = ProblemSection {
                    kind: Some("half-squared-distance".into()),
                    center: Some(vec![2.0, 0.1]),
                    ..Default::default()
                };
                let set = SetSection { kind: Some("l0".into()), dim: Some(2), lambda: Some(0.05), ..Default::default() };
                (problem, set, vec![0.5], Inits::List(vec![vec![0.0, 0.0]]))
            }
        };
        let problem = file.problem.unwrap_or(problem);
        let set = file.set.unwrap_or(set);
        let solver_sec = file.solver.unwrap_or_default();
        let sweep_sec = file.sweep.unwrap_or_default();
        let output = file.output.unwrap_or_default();

        let mut gammas = solver_sec.gamma.unwrap_or(gammas);
        if !flags.gamma.is_empty() {
            gammas = flags.gamma.clone();
        }
        if gammas.is_empty() {
            return Err(CliError::Config("the step size list is empty".into()));
        }
        if command != Command::SparseDemo && command != Command::GridDemo && gammas.len() != 1 {
            return Err(CliError::Config(format!("{} takes exactly one step size", command.name())));
        }

        let mut inits = match (solver_sec.inits, solver_sec.init_mesh) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either inits or init_mesh, not both".into())),
            (Some(list), None) => Inits::List(list),
            (None, Some(mesh)) => Inits::Mesh(mesh),
            (None, None) => inits,
        };
        if !flags.init.is_empty() {
            inits = Inits::List(flags.init.iter().map(|s| parse_vector(s)).collect::<CliResult<_>>()?);
        }
        if let Inits::List(list) = &inits {
            if list.is_empty() {
                return Err(CliError::Config("the initialization list is empty".into()));
            }
        }

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            gamma: None,
            max_iters: flags.max_iters.or(solver_sec.max_iters).unwrap_or(defaults.max_iters),
            increment_tol: solver_sec.increment_tol.unwrap_or(defaults.increment_tol),
            residual_tol: solver_sec.residual_tol.unwrap_or(defaults.residual_tol),
            stop_on_residual: solver_sec.stop_on_residual.unwrap_or(defaults.stop_on_residual),
            record_trace: true,
        };
        if solver.max_iters == 0 {
            return Err(CliError::Config("max_iters must be positive".into()));
        }

        let quadratic_epsilon = match sweep_sec.mode.as_deref().unwrap_or("linear") {
            "linear" => {
                if sweep_sec.epsilon.is_some() {
                    return Err(CliError::Config("epsilon only applies to mode = \"quadratic\"".into()));
                }
                None
            }
            "quadratic" => Some(sweep_sec.epsilon.ok_or_else(|| CliError::Config("quadratic mode needs epsilon".into()))?),
            other => return Err(CliError::Config(format!("unknown sweep mode {other:?}"))),
        };
        let mut forced = sweep_sec.force_v.unwrap_or_default();
        for v in &flags.force_v {
            forced.push(parse_vector(v)?);
        }
        let sweep = SweepSettings {
            count: sweep_sec.count.unwrap_or(10_000),
            radius: sweep_sec.radius.unwrap_or(1.0),
            quadratic_epsilon,
            forced,
            frechet_tol: sweep_sec.frechet_tol.unwrap_or(1e-6),
            critical_tol: sweep_sec.critical_tol.unwrap_or(1e-7),
        };
        if command == Command::Genericity && sweep.count == 0 {
            return Err(CliError::Config("sweep count must be positive".into()));
        }
        let seed = flags.seed.or(sweep_sec.seed).unwrap_or(DEFAULT_SEED);
        let out_dir = flags.out.clone().or(output.dir).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(RunConfig { command, problem, set, gammas, inits, solver, sweep, seed, out_dir })
    }

    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let file = match &cli.flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::resolve(cli.command, file, &cli.flags)
    }

    pub fn objective(&self) -> CliResult<BuiltObjective> {
        build_objective(&self.problem)
    }

    pub fn init_points(&self) -> CliResult<Vec<Point>> {
        self.inits
            .points()?
            .into_iter()
            .map(|p| Point::new(p).map_err(CliError::from))
            .collect()
    }
}

/// Quadratic objective with an optional convexity override.
#[derive(Debug, Clone)]
pub struct BuiltObjective {
    pub quadratic: Quadratic,
    pub convex: bool,
    pub label: String,
}

impl Objective for BuiltObjective {
    fn dim(&self) -> usize {
        self.quadratic.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.quadratic.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.quadratic.gradient(x)
    }
    fn lipschitz_bound(&self) -> f64 {
        self.quadratic.lipschitz_bound()
    }
    fn is_convex(&self) -> bool {
        self.convex
    }
}

fn need<T: Clone>(v: &Option<T>, section: &str, key: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::Config(format!("[{section}] needs `{key}`")))
}

fn build_objective(p: &ProblemSection) -> CliResult<BuiltObjective> {
    let kind = p.kind.as_deref().unwrap_or("sparse-example");
    let quadratic = match kind {
        "sparse-example" => Quadratic::sparse_example(),
        "half-squared-distance" => Quadratic::half_squared_distance(&need(&p.center, "problem", "center")?)?,
        "diagonal" => Quadratic::diagonal(&need(&p.weights, "problem", "weights")?, &need(&p.center, "problem", "center")?)?,
        "quadratic" => Quadratic::new(
            need(&p.hessian, "problem", "hessian")?,
            need(&p.linear, "problem", "linear")?,
            p.constant.unwrap_or(0.0),
        )?,
        other => return Err(CliError::Config(format!("unknown problem kind {other:?}"))),
    };
    let natural = quadratic.is_convex();
    let convex = match p.convex {
        Some(true) if !natural => {
            return Err(CliError::Config("objective declared convex but its Hessian is indefinite".into()))
        }
        Some(flag) => flag,
        None => natural,
    };
    Ok(BuiltObjective { quadratic, convex, label: kind.to_string() })
}

/// What `[set]` describes: a constraint set or a penalty with a prox.
pub enum Feasible {
    Set(Box<dyn ConstraintSet>),
    Penalty(Box<dyn ProxOperator>),
}

impl SetSection {
    pub fn kind(&self) -> &str {
        self.kind.as_deref().unwrap_or("sparse")
    }

    pub fn build(&self, dim: usize) -> CliResult<Feasible> {
        let s = "set";
        let set: Box<dyn ConstraintSet> = match self.kind() {
            "sparse" => Box::new(SparseSet::new(self.dim.unwrap_or(dim), need(&self.k, s, "k")?)?),
            "grid" => Box::new(GridSet::new(
                need(&self.spacing, s, "spacing")?,
                need(&self.lower, s, "lower")?,
                need(&self.upper, s, "upper")?,
            )?),
            "box" => Box::new(BoxSet::new(need(&self.lower, s, "lower")?, need(&self.upper, s, "upper")?)?),
            "finite" => {
                let pts = need(&self.points, s, "points")?
                    .into_iter()
                    .map(Point::new)
                    .collect::<Result<Vec<_>, _>>()?;
                Box::new(FinitePointSet::new(pts)?)
            }
            "rank" => Box::new(RankBoundedSet::new(
                need(&self.rows, s, "rows")?,
                need(&self.cols, s, "cols")?,
                need(&self.rank, s, "rank")?,
            )?),
            "l0" => {
                return Ok(Feasible::Penalty(Box::new(L0Penalty::new(
                    self.dim.unwrap_or(dim),
                    need(&self.lambda, s, "lambda")?,
                )?)))
            }
            "quadratic-penalty" => {
                return Ok(Feasible::Penalty(Box::new(QuadraticPenalty::new(
                    need(&self.q, s, "q")?,
                    need(&self.b, s, "b")?,
                )?)))
            }
            other => return Err(CliError::Config(format!("unknown set kind {other:?}"))),
        };
        Ok(Feasible::Set(set))
    }

    /// A constraint set, rejecting penalties.
    pub fn build_set(&self, dim: usize) -> CliResult<Box<dyn ConstraintSet>> {
        match self.build(dim)? {
            Feasible::Set(s) => Ok(s),
            Feasible::Penalty(_) => Err(CliError::Config(format!("set kind {:?} is a penalty, not a set", self.kind()))),
        }
    }
}

impl Feasible {
    pub fn dim(&self) -> usize {
        match self {
            Feasible::Set(s) => s.dim(),
            Feasible::Penalty(p) => p.dim(),
        }
    }
}
