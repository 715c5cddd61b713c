//! Closed-form circle solutions and invariant checks over trajectories.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::curve::DiscreteCurve;
use crate::error::{Error, Result};
use crate::flow::{Outcome, Trajectory};
use crate::gradient::{flow_velocity_with, FlowParams, KernelMatrix};
use crate::kernel::green_integral;
use crate::vec2::Vec2;

/// Circle decay rate `b = (2π)^a / (1 + (2πλ)²)`: a circle of radius `r`
/// moves with velocity `−b r^{a−2} X`.
pub fn circle_rate(params: &FlowParams) -> f64 {
    TAU.powf(params.a) / (1.0 + (TAU * params.lambda()).powi(2))
}

/// Exact radius at time `t` of the circle that starts at radius `r0`.
///
/// `r(t) = (r0^{2−a} − (2−a) b t)^{1/(2−a)}` for `a ≠ 2` and `r0 e^{−bt}`
/// for `a = 2`; zero after extinction.
pub fn circle_radius_exact(r0: f64, t: f64, params: &FlowParams) -> f64 {
    let b = circle_rate(params);
    let p = 2.0 - params.a;
    if p == 0.0 {
        return r0 * (-b * t).exp();
    }
    let base = r0.powf(p) - p * b * t;
    if base <= 0.0 {
        // only reachable for a < 2
        0.0
    } else {
        base.powf(1.0 / p)
    }
}

/// Extinction time `r0^{2−a} / ((2−a) b)` of a circle, `None` for `a ≥ 2`.
pub fn circle_extinction_time(r0: f64, params: &FlowParams) -> Option<f64> {
    let p = 2.0 - params.a;
    (p > 0.0).then(|| r0.powf(p) / (p * circle_rate(params)))
}

/// Upper bound `L0 e^{−4t/(1+8λ²)}` on the length along the `a = 2` flow.
pub fn decay_envelope(l0: f64, t: f64, lambda: f64) -> f64 {
    l0 * (-4.0 * t / (1.0 + 8.0 * lambda * lambda)).exp()
}

/// Mean distance of the samples to their centroid.
pub fn mean_radius(curve: &DiscreteCurve) -> f64 {
    let o = curve.centroid();
    curve.points().iter().map(|p| (*p - o).norm()).sum::<f64>() / curve.len() as f64
}

/// Ratio of the largest to the smallest distance to the centroid.
pub fn circularity(curve: &DiscreteCurve) -> f64 {
    let o = curve.centroid();
    let (lo, hi) = curve
        .points()
        .iter()
        .map(|p| (*p - o).norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    hi / lo
}

/// `4π·area / L²`, equal to one only for circles.
pub fn isoperimetric_ratio(curve: &DiscreteCurve) -> f64 {
    let pts = curve.points();
    let n = pts.len();
    let area: f64 = (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>() / 2.0;
    let l = curve.length();
    2.0 * TAU * area.abs() / (l * l)
}

/// What is known about the initial curve of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveMeta {
    pub label: String,
    /// Set when the initial curve is an exact circle of this radius; enables
    /// the closed-form oracle check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circle_radius: Option<f64>,
}

impl CurveMeta {
    pub fn new(label: impl Into<String>) -> Self {
        CurveMeta { label: label.into(), circle_radius: None }
    }

    pub fn circle(label: impl Into<String>, r0: f64) -> Self {
        CurveMeta { label: label.into(), circle_radius: Some(r0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The property says nothing about this trajectory (wrong exponent, too
    /// few states).
    NotApplicable,
    /// The initial curve does not meet the hypothesis of the property.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// The mathematical statement being checked.
    pub property: String,
    pub status: CheckStatus,
    /// Signed slack: non-negative exactly when the check passes. Zero for
    /// checks that did not run.
    pub margin: f64,
    pub tolerance: f64,
    pub detail: String,
    #[serde(skip)]
    pub runtime: Duration,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub curve: CurveMeta,
    pub lambda: f64,
    pub a: f64,
    pub samples: usize,
    pub states: usize,
    pub t_final: f64,
    pub outcome: String,
    pub checks: Vec<CheckRecord>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Pretty JSON. Runtimes are left out unless asked for, so that repeated
    /// runs produce identical bytes.
    pub fn to_json(&self, include_timings: bool) -> String {
        let mut copy = self.clone();
        for c in &mut copy.checks {
            c.runtime_ms = include_timings.then(|| c.runtime.as_secs_f64() * 1e3);
        }
        serde_json::to_string_pretty(&copy).expect("report serialization cannot fail")
    }
}

/// Names of the checks, in report order.
pub const CHECK_NAMES: [&str; 11] = [
    "kernel_normalization",
    "kernel_row_sums",
    "velocity_bounds",
    "length_monotone",
    "length_decay_envelope",
    "sup_norm_monotone",
    "immersion_bound",
    "convexity_bound",
    "energy_identity",
    "circle_oracle",
    "asymptotic_shape",
];

pub const KERNEL_NORMALIZATION_TOL: f64 = 1e-6;
pub const ROW_SUM_TOL: f64 = 1e-3;
pub const VELOCITY_BOUND_TOL: f64 = 1e-6;
pub const DECAY_TOL: f64 = 1e-4;
pub const SUP_NORM_SLACK: f64 = 1e-8;
pub const IMMERSION_TOL: f64 = 1e-3;
pub const CONVEXITY_TOL: f64 = 1e-2;
pub const ENERGY_TOL: f64 = 1e-3;
pub const CIRCLE_ORACLE_TOL: f64 = 1e-3;

struct Finding {
    status: CheckStatus,
    margin: f64,
    detail: String,
}

impl Finding {
    fn measured(margin: f64, detail: String) -> Self {
        let status = if margin >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail };
        Finding { status, margin, detail }
    }

    fn not_applicable(detail: impl Into<String>) -> Self {
        Finding { status: CheckStatus::NotApplicable, margin: 0.0, detail: detail.into() }
    }

    fn skipped(detail: impl Into<String>) -> Self {
        Finding { status: CheckStatus::Skipped, margin: 0.0, detail: detail.into() }
    }

    fn informational(detail: String) -> Self {
        Finding { status: CheckStatus::NotApplicable, margin: 0.0, detail }
    }
}

/// Evaluate every invariant on a trajectory. The order of records is fixed
/// and given by [`CHECK_NAMES`].
pub fn run_checks(traj: &Trajectory, params: &FlowParams, meta: &CurveMeta) -> Result<DiagnosticsReport> {
    if traj.states.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no states".into()));
    }
    if traj.diagnostics.len() != traj.states.len() {
        return Err(Error::MissingDiagnostics("per-state diagnostics"));
    }
    let ctx = Ctx { traj, params };
    type CheckFn<'a> = (&'static str, &'static str, f64, Box<dyn Fn() -> Result<Finding> + 'a>);
    let checks: Vec<CheckFn> = vec![
        ("kernel_normalization", "integral of the periodic kernel over one period is -1", KERNEL_NORMALIZATION_TOL, Box::new(|| ctx.kernel_normalization())),
        ("kernel_row_sums", "weighted kernel-matrix row sums approximate -1 on the initial curve", ROW_SUM_TOL, Box::new(|| ctx.row_sums())),
        ("velocity_bounds", "|F| <= L^(a-1)/(2 lambda^2), mean |F'| <= 2 L^(a-1)/lambda^2, |F'| <= 2 L^(a-2)|X'|/lambda^2 on the initial curve", VELOCITY_BOUND_TOL, Box::new(|| ctx.velocity_bounds())),
        ("length_monotone", "length strictly decreases until extinction", 0.0, Box::new(|| ctx.length_monotone())),
        ("length_decay_envelope", "L(t) <= L(0) exp(-4t/(1+8 lambda^2)) for a = 2", DECAY_TOL, Box::new(|| ctx.decay())),
        ("sup_norm_monotone", "max |X_i| is non-increasing", SUP_NORM_SLACK, Box::new(|| ctx.sup_norm())),
        ("immersion_bound", "min |X'|^2(t) >= min |X'|^2(0) exp(-4t/lambda^2) for a = 2", IMMERSION_TOL, Box::new(|| ctx.immersion())),
        ("convexity_bound", "strictly convex curves stay convex with min k(t) >= min k(0) exp(-t/lambda^2) for a = 2", CONVEXITY_TOL, Box::new(|| ctx.convexity())),
        ("energy_identity", "dL/dt = -|F|^2 in the metric at every stored state", ENERGY_TOL, Box::new(|| ctx.energy())),
        ("circle_oracle", "circles shrink with the closed-form radius up to 90% of extinction", CIRCLE_ORACLE_TOL, Box::new(|| ctx.circle_oracle(meta))),
        ("asymptotic_shape", "isoperimetric ratio of the last state (informational only)", 0.0, Box::new(|| ctx.asymptotic_shape())),
    ];
    debug_assert!(checks.iter().map(|c| c.0).eq(CHECK_NAMES.iter().copied()));

    let mut records = Vec::with_capacity(checks.len());
    for (name, property, tolerance, f) in checks {
        let start = Instant::now();
        let out = f()?;
        records.push(CheckRecord {
            name: name.to_string(),
            property: property.to_string(),
            status: out.status,
            margin: if out.margin.is_finite() { out.margin } else { -f64::MAX },
            tolerance,
            detail: out.detail,
            runtime: start.elapsed(),
            runtime_ms: None,
        });
    }
    let last = traj.states.last().expect("non-empty");
    Ok(DiagnosticsReport {
        curve: meta.clone(),
        lambda: params.lambda(),
        a: params.a,
        samples: last.curve.len(),
        states: traj.states.len(),
        t_final: last.t,
        outcome: match traj.outcome {
            Outcome::Completed => "completed".into(),
            Outcome::Extinct { .. } => "extinct".into(),
            Outcome::StepLimit => "step_limit".into(),
        },
        checks: records,
    })
}

struct Ctx<'a> {
    traj: &'a Trajectory,
    params: &'a FlowParams,
}

fn fmt(v: f64) -> String {
    format!("{v:.6e}")
}

impl Ctx<'_> {
    fn is_a2(&self) -> bool {
        self.params.a == 2.0
    }

    fn initial(&self) -> &DiscreteCurve {
        &self.traj.states[0].curve
    }

    /// Indices of the states that are not yet extinct.
    fn live(&self) -> impl Iterator<Item = usize> + '_ {
        let eps = self.params.extinction_eps;
        (0..self.traj.states.len()).filter(move |&k| self.traj.diagnostics[k].length > eps)
    }

    fn kernel_normalization(&self) -> Result<Finding> {
        let n = 8192;
        let err = (green_integral(self.params.kernel(), n)? + 1.0).abs();
        Ok(Finding::measured(KERNEL_NORMALIZATION_TOL - err, format!("n = {n}, |integral + 1| = {}", fmt(err))))
    }

    fn row_sums(&self) -> Result<Finding> {
        let geom = self.initial().geometry();
        if self.params.is_extinct(geom.length) {
            return Ok(Finding::not_applicable("initial curve has zero length"));
        }
        let m = KernelMatrix::dense(&geom, self.params.kernel());
        let worst = m.row_weighted_sums().iter().map(|s| (s + 1.0).abs()).fold(0.0, f64::max);
        Ok(Finding::measured(ROW_SUM_TOL - worst, format!("max |row sum + 1| = {}", fmt(worst))))
    }

    fn velocity_bounds(&self) -> Result<Finding> {
        let curve = self.initial();
        let geom = curve.geometry();
        if self.params.is_extinct(geom.length) {
            return Ok(Finding::not_applicable("initial curve has zero length"));
        }
        let lam2 = self.params.lambda().powi(2);
        let l = geom.length;
        let scale = l.powf(self.params.a - 2.0);
        let f = flow_velocity_with(curve, &geom, self.params);
        let df = crate::curve::derivative(&f);
        let n = f.len() as f64;

        let sup = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let sup_bound = scale * l / (2.0 * lam2);
        let mean_df = df.iter().map(|v| v.norm()).sum::<f64>() / n;
        let mean_bound = scale * 2.0 * l / lam2;
        let mut pointwise = f64::INFINITY;
        for (d, s) in df.iter().zip(&geom.speed) {
            let bound = scale * 2.0 * s / lam2;
            if bound > 0.0 {
                pointwise = pointwise.min(1.0 + VELOCITY_BOUND_TOL - d.norm() / bound);
            } else if d.norm() > 0.0 {
                pointwise = pointwise.min(-1.0);
            }
        }
        let m_sup = 1.0 + VELOCITY_BOUND_TOL - sup / sup_bound;
        let m_mean = 1.0 + VELOCITY_BOUND_TOL - mean_df / mean_bound;
        let margin = m_sup.min(m_mean).min(pointwise);
        Ok(Finding::measured(
            margin,
            format!(
                "sup |F| / bound = {}, mean |F'| / bound = {}, pointwise slack = {}",
                fmt(sup / sup_bound),
                fmt(mean_df / mean_bound),
                fmt(pointwise)
            ),
        ))
    }

    fn length_monotone(&self) -> Result<Finding> {
        let d = &self.traj.diagnostics;
        if d.len() < 2 {
            return Ok(Finding::not_applicable("fewer than two stored states"));
        }
        let l0 = d[0].length;
        if self.params.is_extinct(l0) {
            return Ok(Finding::not_applicable("initial curve has zero length"));
        }
        let eps = self.params.extinction_eps;
        let mut margin = f64::INFINITY;
        for w in d.windows(2) {
            if w[0].length <= eps {
                break;
            }
            margin = margin.min((w[0].length - w[1].length) / l0);
        }
        Ok(Finding::measured(margin, format!("min relative decrease = {}", fmt(margin))))
    }

    fn decay(&self) -> Result<Finding> {
        if !self.is_a2() {
            return Ok(Finding::not_applicable("bound holds for a = 2 only"));
        }
        if self.traj.states.len() < 2 {
            return Ok(Finding::not_applicable("fewer than two stored states"));
        }
        let l0 = self.traj.diagnostics[0].length;
        if !(l0 > 0.0) {
            return Ok(Finding::not_applicable("initial curve has zero length"));
        }
        let lam = self.params.lambda();
        let mut margin = f64::INFINITY;
        let mut worst_t = 0.0;
        for (s, d) in self.traj.states.iter().zip(&self.traj.diagnostics) {
            let m = (decay_envelope(l0, s.t, lam) * (1.0 + DECAY_TOL) - d.length) / l0;
            if m < margin {
                margin = m;
                worst_t = s.t;
            }
        }
        Ok(Finding::measured(margin, format!("tightest at t = {}", fmt(worst_t))))
    }

    fn sup_norm(&self) -> Result<Finding> {
        let d = &self.traj.diagnostics;
        if d.len() < 2 {
            return Ok(Finding::not_applicable("fewer than two stored states"));
        }
        let mut margin = f64::INFINITY;
        for w in d.windows(2) {
            margin = margin.min(w[0].sup_norm - w[1].sup_norm + SUP_NORM_SLACK);
        }
        Ok(Finding::measured(margin, format!("slack {} per stored step", fmt(SUP_NORM_SLACK))))
    }

    fn immersion(&self) -> Result<Finding> {
        if !self.is_a2() {
            return Ok(Finding::not_applicable("bound holds for a = 2 only"));
        }
        let d = &self.traj.diagnostics;
        let m0 = d[0].min_speed;
        if !(m0 > 0.0) {
            return Ok(Finding::skipped("initial curve is not immersed"));
        }
        if d.len() < 2 {
            return Ok(Finding::not_applicable("fewer than two stored states"));
        }
        let lam2 = self.params.lambda().powi(2);
        let mut margin = f64::INFINITY;
        for k in self.live() {
            let t = self.traj.states[k].t;
            let bound = m0 * m0 * (-4.0 * t / lam2).exp() * (1.0 - IMMERSION_TOL);
            margin = margin.min((d[k].min_speed.powi(2) - bound) / (m0 * m0));
        }
        Ok(Finding::measured(margin, format!("min |X'|(0) = {}", fmt(m0))))
    }

    fn convexity(&self) -> Result<Finding> {
        if !self.is_a2() {
            return Ok(Finding::not_applicable("bound holds for a = 2 only"));
        }
        let d = &self.traj.diagnostics;
        let (Some(lo), Some(hi)) = (d[0].min_curvature, d[0].max_curvature) else {
            return Ok(Finding::skipped("initial curve is not immersed"));
        };
        // orient so that curvature is positive
        let sign = if lo > 0.0 {
            1.0
        } else if hi < 0.0 {
            -1.0
        } else {
            return Ok(Finding::skipped("initial curve is not strictly convex"));
        };
        if d.len() < 2 {
            return Ok(Finding::not_applicable("fewer than two stored states"));
        }
        let oriented_min = |k: usize| -> Option<f64> {
            if sign > 0.0 {
                d[k].min_curvature
            } else {
                d[k].max_curvature.map(|v| -v)
            }
        };
        let k0 = oriented_min(0).expect("checked above");
        let lam2 = self.params.lambda().powi(2);
        let mut margin = f64::INFINITY;
        for k in self.live() {
            let t = self.traj.states[k].t;
            let bound = k0 * (-t / lam2).exp() * (1.0 - CONVEXITY_TOL);
            let m = match oriented_min(k) {
                Some(kmin) if kmin > 0.0 => (kmin - bound) / k0,
                // lost immersion or convexity
                _ => -1.0,
            };
            margin = margin.min(m);
        }
        Ok(Finding::measured(margin, format!("min k(0) = {}", fmt(k0))))
    }

    fn energy(&self) -> Result<Finding> {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for k in self.live() {
            let d = &self.traj.diagnostics[k];
            let (Some(rate), Some(norm)) = (d.length_rate, d.velocity_metric_norm) else {
                continue;
            };
            if norm == 0.0 {
                continue;
            }
            worst = worst.max((rate + norm).abs() / norm);
            count += 1;
        }
        if count == 0 {
            return Ok(Finding::not_applicable("no immersed non-degenerate states"));
        }
        Ok(Finding::measured(
            ENERGY_TOL - worst,
            format!("{count} states, max relative defect = {}", fmt(worst)),
        ))
    }

    fn circle_oracle(&self, meta: &CurveMeta) -> Result<Finding> {
        let Some(r0) = meta.circle_radius else {
            return Ok(Finding::not_applicable("initial curve is not a circle"));
        };
        let horizon = circle_extinction_time(r0, self.params).map(|t| 0.9 * t).unwrap_or(f64::INFINITY);
        let mut worst: f64 = 0.0;
        let mut worst_circ: f64 = 1.0;
        for s in &self.traj.states {
            if s.t > horizon {
                break;
            }
            let r = mean_radius(&s.curve);
            worst = worst.max((r - circle_radius_exact(r0, s.t, self.params)).abs() / r0);
            if r > 0.0 {
                worst_circ = worst_circ.max(circularity(&s.curve));
            }
        }
        Ok(Finding::measured(
            CIRCLE_ORACLE_TOL - worst,
            format!("max |r - r_exact| / r0 = {}, max circularity = {}", fmt(worst), fmt(worst_circ)),
        ))
    }

    fn asymptotic_shape(&self) -> Result<Finding> {
        let last = &self.traj.states.last().expect("non-empty").curve;
        if !(last.length() > 0.0) {
            return Ok(Finding::not_applicable("final curve has zero length"));
        }
        let ratios = (isoperimetric_ratio(&self.traj.states[0].curve), isoperimetric_ratio(last));
        Ok(Finding::informational(format!(
            "isoperimetric ratio {} -> {}",
            fmt(ratios.0),
            fmt(ratios.1)
        )))
    }
}

/// Translate a curve so its centroid is at the origin and divide by its length.
pub fn rescaled(curve: &DiscreteCurve) -> Option<DiscreteCurve> {
    let l = curve.length();
    (l > 0.0).then(|| {
        let c: Vec2 = curve.centroid();
        curve.translated(-c).scaled(1.0 / l)
    })
}
