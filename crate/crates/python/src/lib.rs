//! Python bindings: curves, the flow velocity, time integration, and the
//! invariant checks. Points cross the boundary as lists of `(x, y)` tuples.

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use curveflow_core::analysis::{self, CurveMeta};
use curveflow_core::flow::{self, Outcome, StepControl};
use curveflow_core::{gradient, kernel, CurveGeometry, DiscreteCurve, Error, FlowParams, KernelParams, Vec2};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::BlowUp { .. } | Error::Stiffness { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn points_out(p: &[Vec2]) -> Vec<(f64, f64)> {
    p.iter().map(|v| (v.x, v.y)).collect()
}

fn points_in(p: Vec<(f64, f64)>) -> Vec<Vec2> {
    p.into_iter().map(|(x, y)| Vec2::new(x, y)).collect()
}

/// Closed curve sampled at uniform parameters, closure implicit.
#[pyclass(name = "Curve", module = "curveflow", frozen)]
struct PyCurve {
    inner: DiscreteCurve,
}

#[pymethods]
impl PyCurve {
    #[new]
    fn new(points: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(PyCurve { inner: DiscreteCurve::new(points_in(points)).map_err(to_py)? })
    }

    #[staticmethod]
    fn circle(r: f64, n: usize) -> PyResult<Self> {
        Ok(PyCurve { inner: DiscreteCurve::circle(r, n).map_err(to_py)? })
    }

    #[staticmethod]
    fn ellipse(a: f64, b: f64, n: usize) -> PyResult<Self> {
        Ok(PyCurve { inner: DiscreteCurve::ellipse(a, b, n).map_err(to_py)? })
    }

    #[staticmethod]
    fn star(lobes: u32, amplitude: f64, n: usize) -> PyResult<Self> {
        Ok(PyCurve { inner: DiscreteCurve::star(lobes, amplitude, n).map_err(to_py)? })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PyCurve { inner: curveflow_core::io::read_curve(path.as_ref()).map_err(to_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Curve(n={}, length={})", self.inner.len(), self.inner.length())
    }

    fn points(&self) -> Vec<(f64, f64)> {
        points_out(self.inner.points())
    }

    fn length(&self) -> f64 {
        self.inner.length()
    }

    fn curvature(&self) -> PyResult<Vec<f64>> {
        self.inner.curvature().map_err(to_py)
    }

    fn is_convex(&self) -> PyResult<bool> {
        self.inner.is_convex().map_err(to_py)
    }

    fn scaled(&self, rho: f64) -> Self {
        PyCurve { inner: self.inner.scaled(rho) }
    }

    fn resample_constant_speed(&self, m: usize) -> PyResult<Self> {
        Ok(PyCurve { inner: self.inner.resample_constant_speed(m).map_err(to_py)? })
    }

    /// Normalized arc length at the samples.
    fn xi(&self) -> Vec<f64> {
        CurveGeometry::new(&self.inner).xi
    }

    fn to_json(&self) -> String {
        curveflow_core::io::curve_to_json(&self.inner)
    }
}

/// Metric parameters: kernel width `lam`, exponent `a`.
#[pyclass(name = "FlowParams", module = "curveflow", frozen)]
struct PyFlowParams {
    inner: FlowParams,
}

#[pymethods]
impl PyFlowParams {
    #[new]
    #[pyo3(signature = (lam, a=2.0, extinction_eps=None))]
    fn new(lam: f64, a: f64, extinction_eps: Option<f64>) -> PyResult<Self> {
        let mut p = FlowParams::new(lam, a).map_err(to_py)?;
        if let Some(eps) = extinction_eps {
            p = p.with_extinction_eps(eps).map_err(to_py)?;
        }
        Ok(PyFlowParams { inner: p })
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda()
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn extinction_eps(&self) -> f64 {
        self.inner.extinction_eps
    }

    fn __repr__(&self) -> String {
        format!("FlowParams(lam={}, a={})", self.inner.lambda(), self.inner.a)
    }
}

/// Stored states and diagnostics of an integration.
#[pyclass(name = "Trajectory", module = "curveflow", frozen)]
struct PyTrajectory {
    inner: flow::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    fn __len__(&self) -> usize {
        self.inner.states.len()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times()
    }

    fn lengths(&self) -> Vec<f64> {
        self.inner.lengths()
    }

    fn sup_norms(&self) -> Vec<f64> {
        self.inner.diagnostics.iter().map(|d| d.sup_norm).collect()
    }

    fn curve(&self, k: usize) -> PyResult<PyCurve> {
        self.inner
            .states
            .get(k)
            .map(|s| PyCurve { inner: s.curve.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("state index {k} out of range")))
    }

    /// `"completed"`, `"extinct"`, or `"step_limit"`.
    #[getter]
    fn outcome(&self) -> &'static str {
        match self.inner.outcome {
            Outcome::Completed => "completed",
            Outcome::Extinct { .. } => "extinct",
            Outcome::StepLimit => "step_limit",
        }
    }

    #[getter]
    fn extinction_time(&self) -> Option<f64> {
        self.inner.extinction_time()
    }

    /// Run every invariant check; returns the report as JSON text.
    #[pyo3(signature = (circle_radius=None))]
    fn check(&self, circle_radius: Option<f64>) -> PyResult<String> {
        let meta = match circle_radius {
            Some(r) => CurveMeta::circle("python", r),
            None => CurveMeta::new("python"),
        };
        let report = analysis::run_checks(&self.inner, &self.inner.params, &meta).map_err(to_py)?;
        Ok(report.to_json(false))
    }
}

#[pyfunction]
fn green_eval(x: f64, lam: f64) -> PyResult<f64> {
    kernel::green_eval(x, KernelParams::new(lam).map_err(to_py)?).map_err(to_py)
}

#[pyfunction]
fn green_integral(lam: f64, n: usize) -> PyResult<f64> {
    kernel::green_integral(KernelParams::new(lam).map_err(to_py)?, n).map_err(to_py)
}

#[pyfunction]
fn flow_velocity(curve: PyRef<'_, PyCurve>, params: PyRef<'_, PyFlowParams>) -> Vec<(f64, f64)> {
    points_out(&gradient::flow_velocity(&curve.inner, &params.inner))
}

#[pyfunction]
fn gradient_of_length(curve: PyRef<'_, PyCurve>, params: PyRef<'_, PyFlowParams>) -> PyResult<Vec<(f64, f64)>> {
    Ok(points_out(&gradient::gradient(&curve.inner, &params.inner).map_err(to_py)?))
}

#[pyfunction]
fn circulant_velocity(curve: PyRef<'_, PyCurve>, params: PyRef<'_, PyFlowParams>) -> PyResult<Vec<(f64, f64)>> {
    Ok(points_out(&gradient::circulant_velocity(&curve.inner, &params.inner).map_err(to_py)?))
}

#[pyfunction]
fn metric_inner(
    curve: PyRef<'_, PyCurve>,
    v: Vec<(f64, f64)>,
    w: Vec<(f64, f64)>,
    params: PyRef<'_, PyFlowParams>,
) -> PyResult<f64> {
    let geom = curve.inner.geometry();
    gradient::metric_inner(&geom, &points_in(v), &points_in(w), &params.inner).map_err(to_py)
}

/// Integrate to `t_end`; the extinction threshold is made relative to the
/// initial length unless the params set one explicitly.
#[pyfunction]
#[pyo3(signature = (curve, params, t_end, stride=1, rel_tol=None, max_steps=None))]
fn evolve(
    py: Python<'_>,
    curve: PyRef<'_, PyCurve>,
    params: PyRef<'_, PyFlowParams>,
    t_end: f64,
    stride: usize,
    rel_tol: Option<f64>,
    max_steps: Option<usize>,
) -> PyResult<PyTrajectory> {
    let mut p = params.inner;
    if p.extinction_eps == gradient::DEFAULT_EXTINCTION_EPS {
        p = p.relative_to(&curve.inner).map_err(to_py)?;
    }
    let mut ctrl = StepControl::for_lambda(p.lambda());
    if let Some(tol) = rel_tol {
        ctrl.rel_tol = tol;
    }
    if let Some(m) = max_steps {
        ctrl.max_steps = m;
    }
    let c = curve.inner.clone();
    let traj = py
        .detach(move || flow::evolve(&c, &p, &ctrl, t_end, stride))
        .map_err(to_py)?;
    Ok(PyTrajectory { inner: traj })
}

#[pyfunction]
fn circle_radius_exact(r0: f64, t: f64, params: PyRef<'_, PyFlowParams>) -> f64 {
    analysis::circle_radius_exact(r0, t, &params.inner)
}

#[pyfunction]
fn circle_extinction_time(r0: f64, params: PyRef<'_, PyFlowParams>) -> Option<f64> {
    analysis::circle_extinction_time(r0, &params.inner)
}

#[pyfunction]
fn decay_envelope(l0: f64, t: f64, lam: f64) -> f64 {
    analysis::decay_envelope(l0, t, lam)
}

/// Returns `(tau, phi)` tables of the map from `a`-time to `a = 2` time.
#[pyfunction]
fn time_map_to_a(times: Vec<f64>, lengths: Vec<f64>, a: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let m = flow::time_map_to_a(&times, &lengths, a).map_err(to_py)?;
    Ok((m.tau, m.phi))
}

#[pymodule]
fn curveflow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyFlowParams>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(green_eval, m)?)?;
    m.add_function(wrap_pyfunction!(green_integral, m)?)?;
    m.add_function(wrap_pyfunction!(flow_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_of_length, m)?)?;
    m.add_function(wrap_pyfunction!(circulant_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(metric_inner, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(circle_radius_exact, m)?)?;
    m.add_function(wrap_pyfunction!(circle_extinction_time, m)?)?;
    m.add_function(wrap_pyfunction!(decay_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(time_map_to_a, m)?)?;
    Ok(())
}
