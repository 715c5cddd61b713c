//! Time reparametrisation between the `a = 2` flow and the flow with
//! exponent `a`.
//!
//! The velocities differ by the scalar factor `L^{a−2}`, so if `Y(s)` solves
//! the `a = 2` flow then `X(τ) = Y(φ(τ))` solves the `a` flow when
//! `φ′(τ) = ℓ(φ(τ))^{a−2}`, with `ℓ` the length along `Y`. Equivalently the
//! inverse `θ = φ⁻¹` satisfies `θ′(s) = ℓ(s)^{2−a}`, which has a right-hand
//! side independent of the unknown. We integrate `θ` with the embedded RK
//! pair between consecutive samples of `ℓ` (linearly interpolated) and
//! tabulate both directions.

use super::rk;
use crate::error::{Error, Result};

/// Tabulated monotone map between `a`-time `τ` and `a = 2` time `φ(τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMap {
    /// Flow time for exponent `a`.
    pub tau: Vec<f64>,
    /// Corresponding time along the `a = 2` trajectory.
    pub phi: Vec<f64>,
}

impl TimeMap {
    /// `φ(τ)`, linearly interpolated; `None` outside the tabulated range.
    pub fn phi_at(&self, tau: f64) -> Option<f64> {
        interpolate(&self.tau, &self.phi, tau)
    }

    /// `θ(s) = φ⁻¹(s)`, linearly interpolated.
    pub fn tau_at(&self, phi: f64) -> Option<f64> {
        interpolate(&self.phi, &self.tau, phi)
    }

    /// Largest `τ` covered by the table.
    pub fn tau_max(&self) -> f64 {
        *self.tau.last().expect("time map is never empty")
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if !(x >= xs[0] && x <= *xs.last()?) {
        return None;
    }
    let k = xs.partition_point(|&v| v <= x);
    if k == xs.len() {
        return ys.last().copied();
    }
    let k = k.max(1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    Some(ys[k - 1] + w * (ys[k] - ys[k - 1]))
}

/// Build the map for exponent `a` from lengths `lengths[k]` sampled at
/// `a = 2` times `times[k]`.
pub fn time_map_to_a(times: &[f64], lengths: &[f64], a: f64) -> Result<TimeMap> {
    if times.len() != lengths.len() || times.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "need matching non-empty samples, got {} times and {} lengths",
            times.len(),
            lengths.len()
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("exponent a must be finite, got {a}")));
    }
    if let Some(k) = lengths.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Domain(format!(
            "length sample {k} is {}; the time map needs positive lengths",
            lengths[k]
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || !times[0].is_finite() {
        return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
    }

    let p = 2.0 - a;
    let mut tau = Vec::with_capacity(times.len());
    tau.push(times[0]);
    let mut theta = times[0];
    let controller = rk::Controller::default();
    for k in 0..times.len() - 1 {
        let (s0, s1) = (times[k], times[k + 1]);
        let (l0, l1) = (lengths[k], lengths[k + 1]);
        let mut rhs = |s: f64, _y: &[f64]| -> std::result::Result<Vec<f64>, ()> {
            let w = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
            Ok(vec![(l0 + w * (l1 - l0)).powf(p)])
        };
        let scale = l0.powf(p).max(l1.powf(p)) * (s1 - s0);
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        let mut s = s0;
        let mut ds = s1 - s0;
        while s < s1 {
            let h = ds.min(s1 - s);
            let step = rk::step(&mut rhs, s, &[theta], h)
                .map_err(|_| Error::Domain(format!("time map diverged near s = {s}")))?;
            let ratio = step.err[0].abs() / tol;
            if ratio <= 1.0 || h <= 1e-14 * (s1 - s0) {
                theta = step.y[0];
                s = if s1 - s - h <= 0.0 { s1 } else { s + h };
            }
            ds = h * controller.factor(ratio);
        }
        tau.push(theta);
    }
    Ok(TimeMap { tau, phi: times.to_vec() })
}
