//! Time integration of `∂_t X = F_{λ,a}(X)`.
//!
//! The state is the array of sample points on the fixed parameter grid; the
//! grid is Lagrangian and is not redistributed unless
//! [`StepControl::resample_every`] asks for it.

mod rk;
pub mod time_map;

use crate::curve::{length_differential, DiscreteCurve};
use crate::error::{Error, Result};
use crate::gradient::{flow_velocity, flow_velocity_with, metric_inner, FlowParams};
use crate::vec2::Vec2;

pub use time_map::{time_map_to_a, TimeMap};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub curve: DiscreteCurve,
}

/// Step-size and termination controls.
#[derive(Debug, Clone, PartialEq)]
pub struct StepControl {
    pub dt_init: f64,
    /// Target for the embedded error estimate, relative to the current length.
    pub rel_tol: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub max_steps: usize,
    /// When false every step is taken at `dt_init` (clipped to `t_end`).
    pub adaptive: bool,
    /// Redistribute points to constant speed after this many accepted steps.
    pub resample_every: Option<usize>,
}

impl StepControl {
    pub const DEFAULT_REL_TOL: f64 = 1e-7;

    /// Defaults scaled to the velocity bound `L/(2λ²)`.
    pub fn for_lambda(lambda: f64) -> Self {
        let dt_init = (1e-3f64).min(lambda * lambda / 10.0);
        StepControl {
            dt_init,
            rel_tol: Self::DEFAULT_REL_TOL,
            dt_min: 1e-14f64.min(dt_init),
            dt_max: 0.5f64.max(dt_init),
            max_steps: 1_000_000,
            adaptive: true,
            resample_every: None,
        }
    }

    /// Fixed steps of size `dt`.
    pub fn fixed(dt: f64) -> Self {
        StepControl {
            dt_init: dt,
            rel_tol: Self::DEFAULT_REL_TOL,
            dt_min: dt,
            dt_max: dt,
            max_steps: usize::MAX,
            adaptive: false,
            resample_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt_init", self.dt_init)?;
        positive("rel_tol", self.rel_tol)?;
        positive("dt_min", self.dt_min)?;
        positive("dt_max", self.dt_max)?;
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(Error::InvalidArgument(format!(
                "need dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        if self.resample_every == Some(0) {
            return Err(Error::InvalidArgument("resample period must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-state measurements recorded along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub length: f64,
    /// `max_i |X_i|` from the origin.
    pub sup_norm: f64,
    pub min_speed: f64,
    /// `None` when some sample has zero speed.
    pub min_curvature: Option<f64>,
    pub max_curvature: Option<f64>,
    pub convex: Option<bool>,
    /// `‖∂_t X‖²` in the metric at this state; `None` when not immersed.
    pub velocity_metric_norm: Option<f64>,
    /// Exact derivative of the discrete length along the velocity.
    pub length_rate: Option<f64>,
}

impl Diagnostics {
    pub fn measure(curve: &DiscreteCurve, params: &FlowParams) -> Self {
        let geom = curve.geometry();
        let curvature = curve.curvature().ok();
        let min_curvature = curvature.as_ref().map(|k| k.iter().copied().fold(f64::INFINITY, f64::min));
        let max_curvature = curvature.as_ref().map(|k| k.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        let convex = curvature
            .as_ref()
            .map(|k| k.iter().all(|&v| v > 0.0) || k.iter().all(|&v| v < 0.0));
        let velocity = flow_velocity_with(curve, &geom, params);
        let velocity_metric_norm = if geom.length > 0.0 {
            metric_inner(&geom, &velocity, &velocity, params).ok()
        } else {
            None
        };
        let length_rate = length_differential(&geom, &velocity).ok();
        Diagnostics {
            length: geom.length,
            sup_norm: curve.sup_norm(),
            min_speed: geom.min_speed(),
            min_curvature,
            max_curvature,
            convex,
            velocity_metric_norm,
            length_rate,
        }
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Reached `t_end`.
    Completed,
    /// Length fell to the extinction threshold at this time.
    Extinct { t: f64 },
    /// Stopped after `max_steps` accepted steps.
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<FlowState>,
    pub diagnostics: Vec<Diagnostics>,
    pub params: FlowParams,
    pub outcome: Outcome,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub stride: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.length).collect()
    }

    pub fn initial(&self) -> &FlowState {
        &self.states[0]
    }

    pub fn last(&self) -> &FlowState {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn extinction_time(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Extinct { t } => Some(t),
            _ => None,
        }
    }

    /// Keep only the first `n` states. Used to build truncated or corrupted
    /// trajectories when exercising the checkers.
    pub fn truncated(&self, n: usize) -> Trajectory {
        let mut out = self.clone();
        out.states.truncate(n);
        out.diagnostics.truncate(n);
        out
    }

    fn push(&mut self, state: FlowState) {
        let diag = Diagnostics::measure(&state.curve, &self.params);
        self.states.push(state);
        self.diagnostics.push(diag);
    }
}

/// Result of a single embedded step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: FlowState,
    /// Max-norm over points of the embedded error estimate (plane units).
    pub error: f64,
}

fn flatten(points: &[Vec2]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn unflatten(y: &[f64]) -> Vec<Vec2> {
    y.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

/// One RKF45 step of `∂_t X = F(X)`.
pub fn step(state: &FlowState, dt: f64, params: &FlowParams) -> Result<StepResult> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    let mut rhs = |_t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let curve = DiscreteCurve::new(unflatten(y))?;
        Ok(flatten(&flow_velocity(&curve, params)))
    };
    let y0 = flatten(state.curve.points());
    let out = match rk::step(&mut rhs, state.t, &y0, dt) {
        Ok(out) => out,
        Err(rk::StepFailure::NonFinite { stage }) => return Err(Error::BlowUp { t: state.t, stage }),
        Err(rk::StepFailure::Rhs { stage, error }) => {
            return Err(match error {
                Error::InvalidArgument(_) => Error::BlowUp { t: state.t, stage },
                other => other,
            })
        }
    };
    let error = out
        .err
        .chunks_exact(2)
        .map(|c| c[0].hypot(c[1]))
        .fold(0.0, f64::max);
    Ok(StepResult {
        state: FlowState {
            t: state.t + dt,
            curve: DiscreteCurve::new(unflatten(&out.y))?,
        },
        error,
    })
}

/// Integrate from `curve0` until `t_end`, extinction, or the step limit.
///
/// States are stored at `t = 0`, after every `stride`-th accepted step, and
/// at the end of the run.
pub fn evolve(
    curve0: &DiscreteCurve,
    params: &FlowParams,
    ctrl: &StepControl,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory> {
    ctrl.validate()?;
    if stride == 0 {
        return Err(Error::InvalidArgument("output stride must be at least 1".into()));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be finite and non-negative, got {t_end}")));
    }
    let controller = rk::Controller::default();
    let mut traj = Trajectory {
        states: Vec::new(),
        diagnostics: Vec::new(),
        params: *params,
        outcome: Outcome::Completed,
        accepted_steps: 0,
        rejected_steps: 0,
        stride,
    };
    let mut state = FlowState { t: 0.0, curve: curve0.clone() };
    let mut length = curve0.length();
    traj.push(state.clone());
    let mut stored_last = true;
    let mut dt = ctrl.dt_init;

    loop {
        if params.is_extinct(length) {
            traj.outcome = Outcome::Extinct { t: state.t };
            break;
        }
        let remaining = t_end - state.t;
        if remaining <= t_end * 1e-14 {
            traj.outcome = Outcome::Completed;
            break;
        }
        if traj.accepted_steps >= ctrl.max_steps {
            traj.outcome = Outcome::StepLimit;
            break;
        }

        let dt_try = dt.min(ctrl.dt_max).min(remaining);
        let result = step(&state, dt_try, params)?;
        let ratio = if ctrl.adaptive {
            result.error / (ctrl.rel_tol * length)
        } else {
            0.0
        };
        if ratio.is_nan() {
            return Err(Error::BlowUp { t: state.t, stage: 6 });
        }

        if ratio <= 1.0 {
            state = result.state;
            if remaining - dt_try <= t_end * 1e-14 {
                state.t = t_end;
            }
            traj.accepted_steps += 1;
            if let Some(every) = ctrl.resample_every {
                if traj.accepted_steps % every == 0 && state.curve.length() > 0.0 {
                    state.curve = state.curve.resample_constant_speed(state.curve.len())?;
                }
            }
            length = state.curve.length();
            stored_last = traj.accepted_steps % stride == 0;
            if stored_last {
                traj.push(state.clone());
            }
            if ctrl.adaptive {
                // only the final, clipped step may be shorter than the controller asked for
                dt = (dt_try * controller.factor(ratio)).max(ctrl.dt_min);
            }
        } else {
            traj.rejected_steps += 1;
            if dt_try <= ctrl.dt_min {
                return Err(Error::Stiffness {
                    t: state.t,
                    dt: dt_try,
                    err: ratio,
                });
            }
            dt = (dt_try * controller.factor(ratio)).max(ctrl.dt_min);
        }
    }
    if !stored_last {
        traj.push(state);
    }
    Ok(traj)
}
