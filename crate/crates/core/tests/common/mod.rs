//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use curveflow_core::kernel::green_eval;
use curveflow_core::{DiscreteCurve, KernelParams, Vec2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth star-shaped curve `r(θ) = 1 + Σ_{k=2}^{5} (a_k cos kθ + b_k sin kθ)`
/// with small random coefficients, shifted by a random offset.
pub fn random_smooth_curve(rng: &mut ChaCha8Rng, n: usize) -> DiscreteCurve {
    let coeffs: Vec<(f64, f64)> = (2..=5)
        .map(|k| {
            let s = 0.08 / k as f64;
            (rng.gen_range(-s..s), rng.gen_range(-s..s))
        })
        .collect();
    let offset = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let pts = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let r = 1.0
                + coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, (a, b))| {
                        let k = (j + 2) as f64;
                        a * (k * t).cos() + b * (k * t).sin()
                    })
                    .sum::<f64>();
            Vec2::new(r * t.cos(), r * t.sin()) + offset
        })
        .collect();
    DiscreteCurve::new(pts).unwrap()
}

/// Smooth vector field with random Fourier modes up to frequency 4.
pub fn random_smooth_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec2> {
    let modes: Vec<[f64; 4]> = (0..=4)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            modes.iter().enumerate().fold(Vec2::ZERO, |acc, (k, m)| {
                let (c, s) = ((k as f64 * t).cos(), (k as f64 * t).sin());
                acc + Vec2::new(m[0] * c + m[1] * s, m[2] * c + m[3] * s)
            })
        })
        .collect()
}

pub fn max_dist(a: &[Vec2], b: &[Vec2]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (*p - *q).norm()).fold(0.0, f64::max)
}

pub fn max_norm(a: &[Vec2]) -> f64 {
    a.iter().map(|p| p.norm()).fold(0.0, f64::max)
}

/// Signed integer frequency of FFT bin `k`; the Nyquist bin maps to 0 so
/// that derivatives of real data stay real.
fn freq(k: usize, n: usize) -> f64 {
    if 2 * k == n {
        0.0
    } else if k < n / 2 + n % 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
    if inverse {
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// `m`-th spectral derivative in the uniform parameter `u ∈ [0, 1)`.
pub fn spectral_derivative(points: &[Vec2], m: u32) -> Vec<Vec2> {
    let n = points.len();
    let mut z: Vec<Complex64> = points.iter().map(|p| Complex64::new(p.x, p.y)).collect();
    fft(&mut z, false);
    for (k, v) in z.iter_mut().enumerate() {
        *v *= Complex64::new(0.0, TAU * freq(k, n)).powu(m);
    }
    fft(&mut z, true);
    z.iter().map(|c| Vec2::new(c.re, c.im)).collect()
}

/// Spectral antiderivative of real periodic data minus its mean, normalized
/// to vanish at `u = 0`, plus the mean itself.
fn spectral_cumulative(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut z: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut z, false);
    let mean = z[0].re / n as f64;
    for (k, v) in z.iter_mut().enumerate() {
        let f = freq(k, n);
        *v = if f == 0.0 { Complex64::new(0.0, 0.0) } else { *v / Complex64::new(0.0, TAU * f) };
    }
    fft(&mut z, true);
    let base = z[0].re;
    (z.iter().map(|c| c.re - base).collect(), mean)
}

/// Velocity from the curvature-convolution form
/// `F = −L^{a−2} (∂̂²γ ∗_γ G)`, with `∂̂` the derivative in normalized arc
/// length. Everything geometric is spectral; the convolution is a weighted
/// sum plus the leading correction for the kernel's derivative jump at the
/// diagonal.
pub fn curvature_form_velocity(curve: &DiscreteCurve, lambda: f64, a: f64) -> Vec<Vec2> {
    let n = curve.len();
    let pts = curve.points();
    let d1 = spectral_derivative(pts, 1);
    let d2 = spectral_derivative(pts, 2);
    let speed: Vec<f64> = d1.iter().map(|v| v.norm()).collect();
    let (cum, length) = spectral_cumulative(&speed);
    let xi: Vec<f64> = (0..n).map(|i| i as f64 / n as f64 + cum[i] / length).collect();
    let w: Vec<f64> = speed.iter().map(|s| s / (n as f64 * length)).collect();
    let f: Vec<Vec2> = (0..n)
        .map(|i| {
            let s = speed[i];
            let along = d1[i] * (d1[i].dot(d2[i]) / (s * s * s));
            (d2[i] / s - along) * (length * length / s)
        })
        .collect();
    let kp = KernelParams::new(lambda).unwrap();
    let lam2 = lambda * lambda;
    (0..n)
        .map(|i| {
            let mut acc = f[i] * (w[i] * w[i] / (12.0 * lam2));
            for j in 0..n {
                acc += f[j] * (green_eval(xi[j] - xi[i], kp).unwrap() * w[j]);
            }
            acc * -length.powf(a - 2.0)
        })
        .collect()
}
