//! Periodic Green's function of `λ²∂² − 1` on the unit circle.
//!
//! `G(x) = −cosh((|x| − ½)/λ) / (2λ sinh(1/(2λ)))` on `[0, 1]`, extended with
//! period one. It is strictly negative, symmetric about `½`, and integrates
//! to `−1`. The cosh/sinh form overflows once `1/(2λ)` passes ~710, so every
//! evaluation goes through the algebraically identical scaled form
//!
//! ```text
//! G(y) = −(e^{(y−1)/λ} + e^{−y/λ}) / (2λ(1 − e^{−1/λ})),   y ∈ [0, 1)
//! ```

use crate::error::{Error, Result};

/// Width of the Green's kernel, in units of normalized arc length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    lambda: f64,
}

impl KernelParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel width lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(KernelParams { lambda })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Reduce `x` to its representative in `[0, 1)`.
pub fn reduce_period(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("cannot reduce non-finite value {x}")));
    }
    Ok(reduce_unchecked(x))
}

#[inline]
fn reduce_unchecked(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Evaluate the periodic kernel at `x`.
pub fn green_eval(x: f64, params: KernelParams) -> Result<f64> {
    let y = reduce_period(x)?;
    let lam = params.lambda;
    let denom = 2.0 * lam * -(-1.0 / lam).exp_m1();
    Ok(-(((y - 1.0) / lam).exp() + (-y / lam).exp()) / denom)
}

/// Trapezoid rule for `∫₀¹ G` on `n` uniform intervals. Converges to `−1`.
///
/// The integrand is periodic with a derivative kink at the node `x = 0`, so
/// the error is `−1/(12 λ² n²) + O(n⁻⁴)`.
pub fn green_integral(params: KernelParams, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs at least 2 samples, got {n}"
        )));
    }
    let eval = KernelEvaluator::new(params);
    let h = 1.0 / n as f64;
    // periodic trapezoid: endpoints coincide, so the sum runs over n nodes
    let sum: f64 = (0..n).map(|i| eval.reduced(i as f64 * h)).sum();
    Ok(sum * h)
}

/// Kernel evaluator with precomputed constants for the O(N²) inner loops.
///
/// `reduced` takes an argument already in `[0, 1)` and needs a single `exp`
/// per call when `1/λ` is small enough for `e^{−1/λ}` to stay normal.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelEvaluator {
    inv_lambda: f64,
    exp_neg_inv: f64,
    scale: f64,
    one_exp: bool,
}

impl KernelEvaluator {
    pub(crate) fn new(params: KernelParams) -> Self {
        let lam = params.lambda;
        let inv_lambda = 1.0 / lam;
        KernelEvaluator {
            inv_lambda,
            exp_neg_inv: (-inv_lambda).exp(),
            scale: -1.0 / (2.0 * lam * -(-inv_lambda).exp_m1()),
            one_exp: inv_lambda < 600.0,
        }
    }

    #[inline]
    pub(crate) fn reduced(&self, y: f64) -> f64 {
        let near = (-y * self.inv_lambda).exp();
        let far = if self.one_exp {
            self.exp_neg_inv / near
        } else {
            ((y - 1.0) * self.inv_lambda).exp()
        };
        self.scale * (near + far)
    }

    /// Kernel at `xj − xi` for `xi, xj ∈ [0, 1]`.
    #[inline]
    pub(crate) fn at_difference(&self, xi: f64, xj: f64) -> f64 {
        let mut d = xj - xi;
        if d < 0.0 {
            d += 1.0;
        }
        if d >= 1.0 {
            d -= 1.0;
        }
        self.reduced(d)
    }

    #[cfg(test)]
    pub(crate) fn at(&self, x: f64) -> f64 {
        self.reduced(reduce_unchecked(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kp(lambda: f64) -> KernelParams {
        KernelParams::new(lambda).unwrap()
    }

    /// Textbook cosh/sinh form, only usable for moderate λ.
    fn naive(x: f64, lambda: f64) -> f64 {
        let y = x - x.floor();
        -((y - 0.5) / lambda).cosh() / (2.0 * lambda * (0.5 / lambda).sinh())
    }

    #[test]
    fn reduce_period_examples() {
        assert_eq!(reduce_period(0.25).unwrap(), 0.25);
        assert_eq!(reduce_period(-0.25).unwrap(), 0.75);
        assert_eq!(reduce_period(3.0).unwrap(), 0.0);
        assert_eq!(reduce_period(-1e-20).unwrap(), 0.0);
        assert!(reduce_period(f64::NAN).is_err());
        assert!(reduce_period(f64::INFINITY).is_err());
    }

    #[test]
    fn rejects_non_positive_width() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(-1.0).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
    }

    #[test]
    fn closed_form_values() {
        // high-precision evaluations of −1/(2 sinh ½) and −cosh ½/(2 sinh ½)
        let mid = green_eval(0.5, kp(1.0)).unwrap();
        let origin = green_eval(0.0, kp(1.0)).unwrap();
        assert!((mid - -0.959_517_375_667_471_9).abs() < 1e-14);
        assert!((origin - -1.081_976_706_869_326_4).abs() < 1e-14);
    }

    #[test]
    fn matches_naive_form_for_moderate_width() {
        for &lam in &[0.05, 0.3, 1.0, 4.0] {
            for i in 0..=200 {
                let x = -1.0 + i as f64 * 0.0137;
                let g = green_eval(x, kp(lam)).unwrap();
                let r = naive(x, lam);
                assert!((g - r).abs() <= 1e-12 * r.abs(), "x={x} lam={lam}");
            }
        }
    }

    #[test]
    fn symmetric_negative_and_periodic() {
        for &lam in &[1e-3, 0.05, 0.1, 1.0, 10.0] {
            // dyadic grid so that 1 − x is exact
            for i in 0..=16_384 {
                let x = i as f64 / 16_384.0;
                let g = green_eval(x, kp(lam)).unwrap();
                let s = green_eval(1.0 - x, kp(lam)).unwrap();
                assert!(g < 0.0 && g.is_finite(), "x={x} lam={lam}");
                assert!((g - s).abs() <= 4.0 * f64::EPSILON * g.abs(), "x={x} lam={lam}");
                let p = green_eval(x + 1.0, kp(lam)).unwrap();
                assert!((g - p).abs() <= 1e-11 * g.abs(), "x={x} lam={lam}");
            }
        }
    }

    #[test]
    fn integral_is_minus_one() {
        assert!((green_integral(kp(1.0), 4096).unwrap() + 1.0).abs() < 1e-8);
        assert!((green_integral(kp(0.1), 8192).unwrap() + 1.0).abs() < 1e-6);
        for &lam in &[0.05, 0.1, 1.0, 10.0] {
            let err = (green_integral(kp(lam), 1 << 13).unwrap() + 1.0).abs();
            assert!(err <= 1e-6, "lam={lam} err={err}");
        }
        assert!(green_integral(kp(1.0), 1).is_err());
    }

    #[test]
    fn trapezoid_error_has_kink_constant() {
        // leading Euler–Maclaurin term from the unit derivative jump λ²[G'] = 1
        let lam = 0.2;
        let n = 512;
        let err = green_integral(kp(lam), n).unwrap() + 1.0;
        let predicted = -1.0 / (12.0 * lam * lam * (n * n) as f64);
        assert!((err - predicted).abs() < 1e-3 * predicted.abs());
    }

    #[test]
    fn antiderivative_gives_minus_one() {
        // ∫₀¹ cosh((x−½)/λ) dx = 2λ sinh(1/(2λ))
        for &lam in &[0.3, 1.0, 3.0] {
            let anti = |x: f64| lam * ((x - 0.5) / lam).sinh();
            let integral = -(anti(1.0) - anti(0.0)) / (2.0 * lam * (0.5 / lam).sinh());
            assert!((integral + 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn solves_homogeneous_ode_away_from_origin() {
        let lam = 0.3;
        let mut prev = f64::INFINITY;
        for &h in &[1e-2, 5e-3, 2.5e-3] {
            let mut worst: f64 = 0.0;
            for i in 1..20 {
                let x = 0.05 * i as f64;
                let g = |x| green_eval(x, kp(lam)).unwrap();
                let d2 = (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
                worst = worst.max((lam * lam * d2 - g(x)).abs());
            }
            assert!(worst < prev);
            prev = worst;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn fast_evaluator_agrees() {
        for &lam in &[1e-3, 0.01, 0.1, 1.0, 50.0] {
            let e = KernelEvaluator::new(kp(lam));
            for i in 0..1000 {
                let x = i as f64 / 1000.0;
                let a = green_eval(x, kp(lam)).unwrap();
                let b = e.at(x);
                assert!((a - b).abs() <= 1e-13 * a.abs(), "lam={lam} x={x}");
                let r = e.at(x * 0.5);
                let d = e.at_difference(0.3, 0.3 + x * 0.5) - r;
                assert!(d.abs() <= 1e-12 * r.abs(), "lam={lam} x={x}");
            }
        }
    }
}
