//! Stationarity certificates for candidate limit points.
//!
//! A point `x` of `C` is Fréchet stationary when the tangent cone projection
//! of `-grad f(x)` vanishes, and critical when `-grad f(x)` lies in the
//! limiting normal cone. The first implies the second; on nonconvex sets the
//! converse fails. The remaining checks test the global quadratic lower
//! estimate satisfied by projected gradient limits, uniqueness of the
//! projection at the fixed point, and the tangent/normal inequality
//! `||proj_T(x)|| <= dist(x, N)` for unions of rays.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::objective::Objective;
use crate::point::Point;
use crate::sets::ConstraintSet;
use crate::MEMBERSHIP_TOL;

/// Slack allowed on certificate margins.
pub const CERTIFICATE_TOL: f64 = 1e-9;
/// Slack allowed in the polar cone inequality.
pub const POLAR_TOL: f64 = 1e-9;
/// Coordinate tolerance when comparing a projection against the base point.
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// Largest ray family accepted by [`polar_cone_inequality_check`].
pub const MAX_RAYS: usize = 16;

fn neg_gradient(obj: &dyn Objective, set: &dyn ConstraintSet, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(set.dim(), obj.dim())?;
    check_dim(set.dim(), x.len())?;
    if !set.contains(x, MEMBERSHIP_TOL) {
        return Err(Error::Precondition(format!("point {x:?} is not in the set")));
    }
    let g = obj.gradient(x);
    check_dim(x.len(), g.len())?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient at {x:?}")));
    }
    Ok(g.into_iter().map(|v| -v).collect())
}

/// `||proj_{T_C(x)}(-grad f(x))||`.
pub fn frechet_residual(obj: &dyn Objective, set: &dyn ConstraintSet, x: &[f64]) -> Result<f64> {
    let d = neg_gradient(obj, set, x)?;
    Ok(set.tangent_project(x, &d)?.norm())
}

/// Whether `-grad f(x)` lies in the limiting normal cone `N_C(x)`.
pub fn criticality_test(obj: &dyn Objective, set: &dyn ConstraintSet, x: &[f64], tol: f64) -> Result<bool> {
    let d = neg_gradient(obj, set, x)?;
    set.limiting_normal_contains(x, &d, tol)
}

/// Outcome of [`quantitative_certificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub ok: bool,
    /// Smallest `f(y) - f(xbar) + c ||y - xbar||^2` over the witnesses.
    pub worst_margin: f64,
    pub worst_witness: Point,
    /// The factor `c`: `1/gamma`, or `1/(2 gamma)` for convex objectives.
    pub factor: f64,
    pub checked: usize,
}

/// Checks `f(y) >= f(xbar) - c ||y - xbar||^2` for every witness `y`, with
/// `c = 1/gamma`, halved when the objective is convex.
pub fn quantitative_certificate(
    obj: &dyn Objective,
    set: &dyn ConstraintSet,
    xbar: &[f64],
    gamma: f64,
    witnesses: &[Point],
) -> Result<Certificate> {
    check_dim(set.dim(), obj.dim())?;
    check_dim(set.dim(), xbar.len())?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Precondition(format!("gamma must be positive, got {gamma}")));
    }
    if !set.contains(xbar, MEMBERSHIP_TOL) {
        return Err(Error::Precondition(format!("base point {xbar:?} is not in the set")));
    }
    let factor = if obj.is_convex() { 0.5 / gamma } else { 1.0 / gamma };
    let f_bar = obj.value(xbar);
    let mut worst_margin = f64::INFINITY;
    let mut worst_witness = Point::from_slice(xbar)?;
    for y in witnesses {
        check_dim(set.dim(), y.dim())?;
        if !set.contains(y, MEMBERSHIP_TOL) {
            return Err(Error::Precondition(format!("witness {:?} is not in the set", y.coords())));
        }
        let margin = obj.value(y) - f_bar + factor * linalg::dist_sq(y, xbar);
        if margin < worst_margin {
            worst_margin = margin;
            worst_witness = y.clone();
        }
    }
    if !worst_margin.is_finite() && !witnesses.is_empty() {
        return Err(Error::Numeric("non-finite certificate margin".into()));
    }
    Ok(Certificate {
        ok: worst_margin >= -CERTIFICATE_TOL,
        worst_margin,
        worst_witness,
        factor,
        checked: witnesses.len(),
    })
}

/// Whether `proj_C(xbar - s grad f(xbar)) = {xbar}` for every probed `s`.
/// Each `s` must lie in `(0, gamma)`.
pub fn fixed_point_uniqueness(
    obj: &dyn Objective,
    set: &dyn ConstraintSet,
    xbar: &[f64],
    gamma: f64,
    s_samples: &[f64],
) -> Result<bool> {
    let d = neg_gradient(obj, set, xbar)?;
    let mut unique = true;
    for &s in s_samples {
        if !(s > 0.0 && s < gamma) {
            return Err(Error::Precondition(format!("probe step {s} outside (0, {gamma})")));
        }
        let proj = set.project_all(&linalg::axpy(xbar, s, &d))?;
        if !proj.complete {
            return Err(Error::Capability("complete projection enumeration"));
        }
        let single = proj.points.len() == 1 && linalg::max_abs_diff(&proj.points[0], xbar) <= FIXED_POINT_TOL;
        unique &= single;
    }
    Ok(unique)
}

/// Both sides of `||proj_T(x)|| <= dist(x, N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// `T` is the union of the rays spanned by `rays`, `N` its polar cone
/// `{v : <v, z_i> <= 0}`. `lhs` is the norm of the nearest ray projection of
/// `x`; `rhs` is `dist(x, N)` found by enumerating every active set of the
/// polar constraints.
pub fn polar_cone_inequality_check(rays: &[Point], x: &[f64]) -> Result<PolarCheck> {
    if rays.len() > MAX_RAYS {
        return Err(Error::Precondition(format!("at most {MAX_RAYS} rays supported, got {}", rays.len())));
    }
    for z in rays {
        check_dim(x.len(), z.dim())?;
        if linalg::norm_sq(z) == 0.0 {
            return Err(Error::Precondition("degenerate zero ray".into()));
        }
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("point {x:?}")));
    }

    // ||x - p||^2 = ||x||^2 - ||p||^2 for a ray projection p, so the
    // nearest projection is the longest one.
    let lhs = rays
        .iter()
        .map(|z| linalg::dot(x, z).max(0.0) / linalg::norm(z))
        .fold(0.0, f64::max);

    let scale = linalg::norm(x).max(1.0);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1u32 << rays.len()) {
        let active: Vec<&[f64]> =
            rays.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, z)| z.coords()).collect();
        let v = linalg::project_onto_nullspace(&active, x);
        let feasible = rays.iter().all(|z| linalg::dot(&v, z) <= 1e-12 * scale * linalg::norm(z));
        if feasible {
            best = best.min(linalg::dist(&v, x));
        }
    }
    Ok(PolarCheck { lhs, rhs: best, ok: lhs <= best + POLAR_TOL })
}

/// Options for [`stationarity_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    /// Residual threshold for the Fréchet verdict.
    pub frechet_tol: f64,
    /// Tolerance passed to the limiting normal test.
    pub critical_tol: f64,
    /// Step size of the run that produced the point; enables the
    /// certificate and uniqueness probe.
    pub gamma: Option<f64>,
    /// Probe steps as fractions of `gamma`.
    pub s_fractions: Vec<f64>,
    /// Witnesses for the certificate; `None` uses the set's defaults.
    pub witnesses: Option<Vec<Point>>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            frechet_tol: 1e-8,
            critical_tol: 1e-7,
            gamma: None,
            s_fractions: alloc::vec![0.2, 0.5, 0.9],
            witnesses: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantitativeOutcome {
    pub ok: bool,
    pub worst_violation: f64,
    pub worst_witness: Point,
    pub factor: f64,
    pub witness_strategy: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessOutcome {
    pub unique: bool,
    pub probed: Vec<f64>,
}

/// Everything the diagnostics layer can say about one point. Fields stay
/// `None` when the set lacks the oracle they need.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub point: Point,
    pub frechet_residual: Option<f64>,
    pub is_frechet: Option<bool>,
    pub is_critical: Option<bool>,
    pub quantitative: Option<QuantitativeOutcome>,
    pub fixed_point_unique: Option<UniquenessOutcome>,
}

fn optional<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Capability(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn stationarity_report(
    obj: &dyn Objective,
    set: &dyn ConstraintSet,
    x: &Point,
    opts: &ReportOptions,
) -> Result<StationarityReport> {
    neg_gradient(obj, set, x)?;
    let frechet_residual = optional(frechet_residual(obj, set, x))?;
    let is_frechet = frechet_residual.map(|r| r <= opts.frechet_tol);
    let is_critical = optional(criticality_test(obj, set, x, opts.critical_tol))?;

    let mut quantitative = None;
    let mut fixed_point_unique = None;
    if let Some(gamma) = opts.gamma {
        let ws = match &opts.witnesses {
            Some(w) => Some((w.clone(), format!("{} supplied witnesses", w.len()))),
            None => optional(set.witnesses(x))?.map(|w| (w.points, w.strategy)),
        };
        if let Some((points, strategy)) = ws {
            let c = quantitative_certificate(obj, set, x, gamma, &points)?;
            quantitative = Some(QuantitativeOutcome {
                ok: c.ok,
                worst_violation: c.worst_margin,
                worst_witness: c.worst_witness,
                factor: c.factor,
                witness_strategy: strategy,
            });
        }
        let probed: Vec<f64> = opts.s_fractions.iter().map(|f| f * gamma).collect();
        fixed_point_unique = optional(fixed_point_uniqueness(obj, set, x, gamma, &probed))?
            .map(|unique| UniquenessOutcome { unique, probed });
    }
    Ok(StationarityReport {
        point: x.clone(),
        frechet_residual,
        is_frechet,
        is_critical,
        quantitative,
        fixed_point_unique,
    })
}
