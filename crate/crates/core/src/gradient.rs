//! The `H¹_{λ,a}` gradient of length and the flow velocity.
//!
//! For a curve γ with length `L` and normalized arc length `ξ`,
//!
//! ```text
//! ∇L(γ) = L^{a−2}/λ² · (γ + γ ∗_γ G)
//! (f ∗_γ G)(u) = ∫ f(v) G(ξ(v) − ξ(u)) dv̂,     dv̂ = |γ′(v)|/L dv
//! ```
//!
//! Because `∫G = −1`, the gradient equals `−L^{a−2}/λ² ∫ (γ(v) − γ(u)) G dv̂`.
//! That difference form is what every velocity routine here evaluates: it is
//! exactly translation invariant, and its integrand vanishes on the diagonal,
//! so the kernel's derivative kink costs nothing at leading order.
//!
//! Quadrature is a weighted sum over the samples with the weights of
//! [`CurveGeometry`]. The diagonal term uses the finite value `G(0)`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::curve::{derivative, CurveGeometry, DiscreteCurve};
use crate::error::{Error, Result};
use crate::kernel::{KernelEvaluator, KernelParams};
use crate::vec2::Vec2;

/// Extinction threshold used by [`FlowParams::new`], in absolute length units.
pub const DEFAULT_EXTINCTION_EPS: f64 = 1e-9;

/// Relative extinction threshold used when a run knows its initial length.
pub const DEFAULT_RELATIVE_EXTINCTION: f64 = 1e-9;

/// Parameters of the metric family and the degenerate-length branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    kernel: KernelParams,
    /// Homogeneity exponent of the metric.
    pub a: f64,
    /// Curves with length at or below this value have zero velocity.
    pub extinction_eps: f64,
}

impl FlowParams {
    pub fn new(lambda: f64, a: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!("exponent a must be finite, got {a}")));
        }
        Ok(FlowParams {
            kernel: KernelParams::new(lambda)?,
            a,
            extinction_eps: DEFAULT_EXTINCTION_EPS,
        })
    }

    pub fn with_extinction_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "extinction threshold must be positive, got {eps}"
            )));
        }
        self.extinction_eps = eps;
        Ok(self)
    }

    /// Set the threshold to [`DEFAULT_RELATIVE_EXTINCTION`] times the length of `curve`.
    pub fn relative_to(self, curve: &DiscreteCurve) -> Result<Self> {
        let length = curve.length();
        if !(length > 0.0) {
            return Err(Error::DegenerateCurve { length });
        }
        self.with_extinction_eps(DEFAULT_RELATIVE_EXTINCTION * length)
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.kernel.lambda()
    }

    #[inline]
    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    /// `L^{a−2} / λ²`, the scalar in front of the convolution.
    #[inline]
    pub(crate) fn prefactor(&self, length: f64) -> f64 {
        let lam = self.lambda();
        length.powf(self.a - 2.0) / (lam * lam)
    }

    #[inline]
    pub(crate) fn is_extinct(&self, length: f64) -> bool {
        !(length > self.extinction_eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    Dense,
    /// Valid only for constant-speed sampling, where `M_ij` depends on `j − i`.
    Circulant,
}

/// Table of kernel values `M_ij = G(ξ_j − ξ_i)` with quadrature weights.
///
/// Dense mode stores all `N²` entries; circulant mode stores the first row.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    values: Vec<f64>,
    weights: Vec<f64>,
    mode: KernelMode,
}

impl KernelMatrix {
    pub fn dense(geom: &CurveGeometry, kernel: KernelParams) -> Self {
        let eval = KernelEvaluator::new(kernel);
        let n = geom.len();
        let mut values = vec![0.0; n * n];
        values
            .par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(i, row)| {
                let xi = geom.xi[i];
                for (j, m) in row.iter_mut().enumerate() {
                    *m = eval.at_difference(xi, geom.xi[j]);
                }
            });
        KernelMatrix {
            n,
            values,
            weights: geom.weights.clone(),
            mode: KernelMode::Dense,
        }
    }

    pub fn circulant(n: usize, kernel: KernelParams) -> Self {
        let eval = KernelEvaluator::new(kernel);
        let inv = 1.0 / n as f64;
        KernelMatrix {
            n,
            values: (0..n).map(|k| eval.reduced(k as f64 * inv)).collect(),
            weights: vec![inv; n],
            mode: KernelMode::Circulant,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.mode {
            KernelMode::Dense => self.values[i * self.n + j],
            KernelMode::Circulant => self.values[(j + self.n - i) % self.n],
        }
    }

    /// `Σ_j M_ij ŵ_j` for every row: the discrete `∫G`, close to `−1`.
    pub fn row_weighted_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * self.weights[j]).sum())
            .collect()
    }

    /// `(f ∗ G)_i = Σ_j f_j M_ij ŵ_j`.
    pub fn apply(&self, f: &[Vec2]) -> Vec<Vec2> {
        (0..self.n)
            .into_par_iter()
            .map(|i| {
                let mut acc = Vec2::ZERO;
                for j in 0..self.n {
                    acc += f[j] * (self.get(i, j) * self.weights[j]);
                }
                acc
            })
            .collect()
    }
}

/// Discrete γ-convolution of `f` against the kernel.
pub fn convolve(geom: &CurveGeometry, f: &[Vec2], params: &FlowParams) -> Result<Vec<Vec2>> {
    if params.is_extinct(geom.length) {
        return Err(Error::DegenerateCurve { length: geom.length });
    }
    check_len(f.len(), geom.len())?;
    let eval = KernelEvaluator::new(params.kernel());
    Ok((0..geom.len())
        .into_par_iter()
        .map(|i| {
            let xi = geom.xi[i];
            let mut acc = Vec2::ZERO;
            for j in 0..f.len() {
                acc += f[j] * (eval.at_difference(xi, geom.xi[j]) * geom.weights[j]);
            }
            acc
        })
        .collect())
}

/// Velocity `F = −∇L` of the flow, zero on the degenerate branch.
pub fn flow_velocity(curve: &DiscreteCurve, params: &FlowParams) -> Vec<Vec2> {
    flow_velocity_with(curve, &curve.geometry(), params)
}

/// [`flow_velocity`] with a precomputed (or substituted) geometry.
pub fn flow_velocity_with(curve: &DiscreteCurve, geom: &CurveGeometry, params: &FlowParams) -> Vec<Vec2> {
    let n = curve.len();
    if params.is_extinct(geom.length) {
        return vec![Vec2::ZERO; n];
    }
    let eval = KernelEvaluator::new(params.kernel());
    let scale = -params.prefactor(geom.length);
    let points = curve.points();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = points[i];
            let xi = geom.xi[i];
            let mut acc = Vec2::ZERO;
            for j in 0..n {
                acc += (points[j] - pi) * (eval.at_difference(xi, geom.xi[j]) * geom.weights[j]);
            }
            acc * scale
        })
        .collect()
}

/// The `H¹_{λ,a}` gradient of length.
pub fn gradient(curve: &DiscreteCurve, params: &FlowParams) -> Result<Vec<Vec2>> {
    let geom = curve.geometry();
    if params.is_extinct(geom.length) {
        return Err(Error::DegenerateCurve { length: geom.length });
    }
    Ok(flow_velocity_with(curve, &geom, params).into_iter().map(|v| -v).collect())
}

/// Discrete metric
/// `L^{−a} ⟨v, w⟩_{L²(γ)} + λ² L^{2−a} ⟨v′/|γ′|, w′/|γ′|⟩_{L²(γ)}`.
pub fn metric_inner(geom: &CurveGeometry, v: &[Vec2], w: &[Vec2], params: &FlowParams) -> Result<f64> {
    geom.require_immersed()?;
    check_len(v.len(), geom.len())?;
    check_len(w.len(), geom.len())?;
    let n = geom.len() as f64;
    let length = geom.length;
    let lam = params.lambda();
    let dv = derivative(v);
    let dw = derivative(w);
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for i in 0..geom.len() {
        let s = geom.speed[i];
        l2 += v[i].dot(w[i]) * s;
        h1 += dv[i].dot(dw[i]) / s;
    }
    Ok((length.powf(-params.a) * l2 + lam * lam * length.powf(2.0 - params.a) * h1) / n)
}

/// Fast velocity: resample to constant speed, then apply the circulant kernel
/// by FFT. The result is the velocity at the resampled stations.
pub fn circulant_velocity(curve: &DiscreteCurve, params: &FlowParams) -> Result<Vec<Vec2>> {
    let resampled = curve.resample_constant_speed(curve.len())?;
    circulant_velocity_uniform(&resampled, params)
}

/// Circulant velocity for a curve already sampled at constant speed.
pub fn circulant_velocity_uniform(curve: &DiscreteCurve, params: &FlowParams) -> Result<Vec<Vec2>> {
    circulant_velocity_planned(curve, params, &CirculantPlan::new(curve.len()))
}

/// [`circulant_velocity_uniform`] with reusable FFT plans.
pub fn circulant_velocity_planned(
    curve: &DiscreteCurve,
    params: &FlowParams,
    plan: &CirculantPlan,
) -> Result<Vec<Vec2>> {
    let length = curve.length();
    if params.is_extinct(length) {
        return Err(Error::DegenerateCurve { length });
    }
    let n = curve.len();
    check_len(plan.len(), n)?;
    let kernel = KernelMatrix::circulant(n, params.kernel());
    let inv_n = 1.0 / n as f64;
    let row: Vec<f64> = kernel.values.iter().map(|g| g * inv_n).collect();
    let row_sum: f64 = row.iter().sum();

    let mut z: Vec<Complex64> = curve.points().iter().map(|p| Complex64::new(p.x, p.y)).collect();
    plan.correlate(&mut z, &row);

    let scale = -params.prefactor(length);
    Ok(curve
        .points()
        .iter()
        .zip(&z)
        .map(|(&p, c)| (Vec2::new(c.re, c.im) - p * row_sum) * scale)
        .collect())
}

/// Reusable FFT plans for repeated circulant evaluations of one size.
#[derive(Clone)]
pub struct CirculantPlan {
    n: usize,
    forward: Arc<dyn rustfft::Fft<f64>>,
    inverse: Arc<dyn rustfft::Fft<f64>>,
}

impl CirculantPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        CirculantPlan {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Cyclic correlation `c_i = Σ_j z_j g_{(j−i) mod n}` of complex data.
    pub fn correlate(&self, z: &mut [Complex64], g: &[f64]) {
        let mut gh: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(z);
        self.forward.process(&mut gh);
        for (zk, gk) in z.iter_mut().zip(&gh) {
            *zk *= gk.conj();
        }
        self.inverse.process(z);
        let inv = 1.0 / self.n as f64;
        for zk in z.iter_mut() {
            *zk *= inv;
        }
    }
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::InvalidArgument(format!(
            "field has {got} samples, curve has {want}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn params(lambda: f64, a: f64) -> FlowParams {
        FlowParams::new(lambda, a).unwrap()
    }

    /// `(2π)^a / (1 + (2πλ)²)`, the circle decay rate.
    fn circle_rate(lambda: f64, a: f64) -> f64 {
        TAU.powf(a) / (1.0 + (TAU * lambda).powi(2))
    }

    fn max_diff(a: &[Vec2], b: &[Vec2]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (*x - *y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_params() {
        assert!(FlowParams::new(0.0, 2.0).is_err());
        assert!(FlowParams::new(1.0, f64::NAN).is_err());
        assert!(params(1.0, 2.0).with_extinction_eps(0.0).is_err());
    }

    #[test]
    fn convolution_of_constant_is_minus_constant() {
        let c = DiscreteCurve::ellipse(2.0, 1.0, 512).unwrap();
        let g = c.geometry();
        let f = vec![Vec2::new(1.5, -0.5); 512];
        let out = convolve(&g, &f, &params(1.0, 2.0)).unwrap();
        for v in &out {
            assert!((*v + f[0]).norm() < 1e-5);
        }
        let zero = convolve(&g, &vec![Vec2::ZERO; 512], &params(1.0, 2.0)).unwrap();
        assert!(zero.iter().all(|v| *v == Vec2::ZERO));
    }

    #[test]
    fn convolution_of_circle() {
        // X + X∗G = (2πλ)²/(1 + (2πλ)²) X for the round circle
        for &lam in &[0.25, 1.0] {
            let n = 2048;
            let c = DiscreteCurve::circle(1.0, n).unwrap();
            let conv = convolve(&c.geometry(), c.points(), &params(lam, 2.0)).unwrap();
            let factor = (TAU * lam).powi(2) / (1.0 + (TAU * lam).powi(2));
            for (p, q) in c.points().iter().zip(&conv) {
                // plain quadrature keeps the O(h²/λ²) kink error
                assert!((*p + *q - *p * factor).norm() < 1.0 / (lam * lam * (n * n) as f64));
            }
        }
    }

    #[test]
    fn degenerate_branch() {
        let c = DiscreteCurve::new(vec![Vec2::new(1.0, 2.0); 32]).unwrap();
        let p = params(1.0, 2.0);
        assert!(flow_velocity(&c, &p).iter().all(|v| *v == Vec2::ZERO));
        assert!(matches!(gradient(&c, &p), Err(Error::DegenerateCurve { .. })));
        assert!(convolve(&c.geometry(), c.points(), &p).is_err());
        assert!(circulant_velocity(&c, &p).is_err());
    }

    #[test]
    fn circle_velocity_is_radial_with_closed_form_rate() {
        for &(lam, a, r) in &[(1.0, 2.0, 1.0), (1.0, 2.0, 3.0), (0.5, 1.0, 2.0), (0.3, 3.0, 0.7)] {
            let c = DiscreteCurve::circle(r, 512).unwrap();
            let v = flow_velocity(&c, &params(lam, a));
            // continuum rate uses L = 2πr; the stencil length differs by O(N⁻²)
            let rate = circle_rate(lam, a) * (c.length() / TAU).powf(a - 2.0);
            for (p, f) in c.points().iter().zip(&v) {
                assert!((*f + *p * rate).norm() < 1e-6 * rate * r, "lam={lam} a={a}");
            }
        }
    }

    #[test]
    fn gradient_is_negative_velocity() {
        let c = DiscreteCurve::star(3, 0.3, 256).unwrap();
        let p = params(0.4, 1.5);
        let g = gradient(&c, &p).unwrap();
        let f = flow_velocity(&c, &p);
        for (a, b) in g.iter().zip(&f) {
            assert!((*a + *b).norm() <= 1e-10 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn gradient_homogeneity_and_translation() {
        let c = DiscreteCurve::ellipse(1.3, 0.6, 256).unwrap();
        let p = params(0.5, 3.0);
        let g = gradient(&c, &p).unwrap();
        let g2 = gradient(&c.scaled(2.0), &p).unwrap();
        for (a, b) in g.iter().zip(&g2) {
            assert!((*a * 4.0 - *b).norm() < 1e-10 * b.norm());
        }
        let gt = gradient(&c.translated(Vec2::new(10.0, -3.0)), &p).unwrap();
        assert!(max_diff(&g, &gt) < 1e-10);
    }

    #[test]
    fn metric_scaling_and_definiteness() {
        let c = DiscreteCurve::star(4, 0.2, 128).unwrap();
        let n = c.len();
        let v: Vec<Vec2> = (0..n).map(|i| Vec2::new((i as f64 * 0.1).sin(), 0.5)).collect();
        let w: Vec<Vec2> = (0..n).map(|i| Vec2::new(0.2, (i as f64 * 0.07).cos())).collect();
        for &a in &[0.0, 1.0, 2.0, 3.5] {
            let p = params(0.7, a);
            let base = metric_inner(&c.geometry(), &v, &w, &p).unwrap();
            let rho = 1.7;
            let sv: Vec<_> = v.iter().map(|&x| x * rho).collect();
            let sw: Vec<_> = w.iter().map(|&x| x * rho).collect();
            let scaled = metric_inner(&c.scaled(rho).geometry(), &sv, &sw, &p).unwrap();
            assert!((scaled - rho.powf(3.0 - a) * base).abs() < 1e-10 * scaled.abs());
            assert!(metric_inner(&c.geometry(), &v, &v, &p).unwrap() > 0.0);
            let sym = metric_inner(&c.geometry(), &w, &v, &p).unwrap();
            assert!((sym - base).abs() < 1e-14 * base.abs().max(1.0));
        }
        let flat = DiscreteCurve::new(vec![Vec2::ZERO; 16]).unwrap();
        assert!(matches!(
            metric_inner(&flat.geometry(), &vec![Vec2::ZERO; 16], &vec![Vec2::ZERO; 16], &params(1.0, 2.0)),
            Err(Error::NotImmersed { .. })
        ));
    }

    #[test]
    fn kernel_matrix_modes_agree_on_uniform_grid() {
        let c = DiscreteCurve::circle(1.0, 64).unwrap();
        let kp = KernelParams::new(0.3).unwrap();
        let dense = KernelMatrix::dense(&CurveGeometry::constant_speed(&c), kp);
        let circ = KernelMatrix::circulant(64, kp);
        for i in 0..64 {
            for j in 0..64 {
                assert!((dense.get(i, j) - circ.get(i, j)).abs() < 1e-13);
                assert!(dense.get(i, j) < 0.0);
            }
        }
        for s in circ.row_weighted_sums() {
            assert!((s + 1.0).abs() < 1e-3);
        }
        let f: Vec<Vec2> = c.points().to_vec();
        assert!(max_diff(&dense.apply(&f), &circ.apply(&f)) < 1e-13);
    }

    #[test]
    fn circulant_matches_dense_on_circle() {
        let c = DiscreteCurve::circle(1.0, 256).unwrap();
        let p = params(1.0, 2.0);
        let fast = circulant_velocity(&c, &p).unwrap();
        let dense = flow_velocity(&c, &p);
        assert!(max_diff(&fast, &dense) < 1e-10);
    }

    #[test]
    fn plan_correlation_matches_direct_sum() {
        let n = 12;
        let plan = CirculantPlan::new(n);
        let z0: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let g: Vec<f64> = (0..n).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let mut z = z0.clone();
        plan.correlate(&mut z, &g);
        for i in 0..n {
            let direct: Complex64 = (0..n).map(|j| z0[j] * g[(j + n - i) % n]).sum();
            assert!((direct - z[i]).norm() < 1e-12);
        }
    }
}
