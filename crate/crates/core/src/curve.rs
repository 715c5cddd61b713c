//! Closed plane curves sampled at uniform parameters `u_i = i/N`.
//!
//! Derivatives use periodic second-order central differences. These are
//! consistent for smooth curves; inputs that are only `W^{1,1}` (corners,
//! kinks, near-stalls) are accepted but the stencil error there is O(1/N)
//! rather than O(1/N²) and has not been characterised further.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Fewest samples accepted for a curve.
pub const MIN_SAMPLES: usize = 8;

/// N samples of a closed map from the circle to the plane. The closing
/// point `p_N = p_0` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    points: Vec<Vec2>,
}

impl DiscreteCurve {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.len() < MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "a curve needs at least {MIN_SAMPLES} samples, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample {i} has a non-finite coordinate"
            )));
        }
        Ok(DiscreteCurve { points })
    }

    /// Circle of radius `r` centred at the origin, positively oriented.
    pub fn circle(r: f64, n: usize) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        Self::ellipse(r, r, n)
    }

    /// Ellipse with semi-axes `a` (along x) and `b` (along y).
    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "semi-axes must be positive, got ({a}, {b})"
            )));
        }
        Self::new(
            (0..n)
                .map(|i| {
                    let (s, c) = unit_angle(i, n);
                    Vec2::new(a * c, b * s)
                })
                .collect(),
        )
    }

    /// Polar star `r(θ) = 1 + amplitude·cos(lobes·θ)`.
    pub fn star(lobes: u32, amplitude: f64, n: usize) -> Result<Self> {
        if !(amplitude.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "star amplitude must lie in (-1, 1), got {amplitude}"
            )));
        }
        Self::new(
            (0..n)
                .map(|i| {
                    let (s, c) = unit_angle(i, n);
                    let theta = TAU * i as f64 / n as f64;
                    let r = 1.0 + amplitude * (lobes as f64 * theta).cos();
                    Vec2::new(r * c, r * s)
                })
                .collect(),
        )
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec2> {
        self.points
    }

    pub fn scaled(&self, rho: f64) -> DiscreteCurve {
        DiscreteCurve {
            points: self.points.iter().map(|&p| p * rho).collect(),
        }
    }

    pub fn translated(&self, offset: Vec2) -> DiscreteCurve {
        DiscreteCurve {
            points: self.points.iter().map(|&p| p + offset).collect(),
        }
    }

    pub fn centroid(&self) -> Vec2 {
        let sum = self.points.iter().fold(Vec2::ZERO, |acc, &p| acc + p);
        sum / self.len() as f64
    }

    /// `max_i |p_i|`, measured from the origin.
    pub fn sup_norm(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn geometry(&self) -> CurveGeometry {
        CurveGeometry::new(self)
    }

    pub fn length(&self) -> f64 {
        let n = self.len() as f64;
        derivative(&self.points).iter().map(|d| d.norm()).sum::<f64>() / n
    }

    /// Signed curvature `(x′y″ − y′x″)/|γ′|³` at every sample.
    pub fn curvature(&self) -> Result<Vec<f64>> {
        let d1 = derivative(&self.points);
        let d2 = second_derivative(&self.points);
        d1.iter()
            .zip(&d2)
            .enumerate()
            .map(|(i, (&v, &a))| {
                let speed = v.norm();
                if speed == 0.0 {
                    Err(Error::NotImmersed { index: i })
                } else {
                    Ok(v.cross(a) / (speed * speed * speed))
                }
            })
            .collect()
    }

    /// True when every curvature sample is nonzero, all share one sign, and
    /// the tangent turns exactly once.
    ///
    /// The turning condition excludes locally convex curves that wind more
    /// than once, such as a limaçon with an inner loop, whose curvature never
    /// changes sign.
    pub fn is_convex(&self) -> Result<bool> {
        let k = self.curvature()?;
        let one_sign = k.iter().all(|&k| k > 0.0) || k.iter().all(|&k| k < 0.0);
        Ok(one_sign && self.turning_number().abs() == 1)
    }

    /// Number of turns of the tangent around the curve.
    pub fn turning_number(&self) -> i64 {
        let d = derivative(&self.points);
        let n = d.len();
        let total: f64 = (0..n)
            .map(|i| {
                let (a, b) = (d[i], d[(i + 1) % n]);
                a.cross(b).atan2(a.dot(b))
            })
            .sum();
        (total / std::f64::consts::TAU).round() as i64
    }

    /// Resample at `m` stations uniformly spaced in normalized arc length.
    ///
    /// Inverts the cumulative arc length piecewise-linearly and interpolates
    /// the points linearly; station 0 is the sample at `u = 0`.
    pub fn resample_constant_speed(&self, m: usize) -> Result<DiscreteCurve> {
        if m < MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "resampling needs at least {MIN_SAMPLES} stations, got {m}"
            )));
        }
        let geom = self.geometry();
        if !(geom.length > 0.0) {
            return Err(Error::DegenerateCurve { length: geom.length });
        }
        let n = self.len();
        let mut out = Vec::with_capacity(m);
        let mut seg = 0usize;
        for k in 0..m {
            let s = k as f64 / m as f64;
            // xi is non-decreasing; xi_N = 1 closes the curve
            while seg + 1 < n && geom.xi[seg + 1] <= s {
                seg += 1;
            }
            let x0 = geom.xi[seg];
            let x1 = if seg + 1 < n { geom.xi[seg + 1] } else { 1.0 };
            let p0 = self.points[seg];
            let p1 = self.points[(seg + 1) % n];
            let theta = if x1 > x0 { ((s - x0) / (x1 - x0)).clamp(0.0, 1.0) } else { 0.0 };
            out.push(p0 + (p1 - p0) * theta);
        }
        DiscreteCurve::new(out)
    }
}

#[inline]
fn unit_angle(i: usize, n: usize) -> (f64, f64) {
    // exact values at quarter turns so circle(1, 4) is exactly the square
    let four_i = 4 * i;
    if four_i % n == 0 {
        match (four_i / n) % 4 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        (TAU * i as f64 / n as f64).sin_cos()
    }
}

/// Periodic central difference `N (p_{i+1} − p_{i−1}) / 2`.
pub(crate) fn derivative(points: &[Vec2]) -> Vec<Vec2> {
    let n = points.len();
    let half_n = 0.5 * n as f64;
    (0..n)
        .map(|i| (points[(i + 1) % n] - points[(i + n - 1) % n]) * half_n)
        .collect()
}

/// Periodic second difference `N² (p_{i+1} − 2 p_i + p_{i−1})`.
pub(crate) fn second_derivative(points: &[Vec2]) -> Vec<Vec2> {
    let n = points.len();
    let n2 = (n * n) as f64;
    (0..n)
        .map(|i| (points[(i + 1) % n] - points[i] * 2.0 + points[(i + n - 1) % n]) * n2)
        .collect()
}

/// Derived quantities of a curve on the fixed parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveGeometry {
    /// Central-difference tangent `γ′(u_i)`.
    pub derivative: Vec<Vec2>,
    pub speed: Vec<f64>,
    pub length: f64,
    /// Normalized arc length `ξ(u_i) ∈ [0, 1)`.
    pub xi: Vec<f64>,
    /// Quadrature weights `|γ′(u_i)| / (N·L)`; they sum to one.
    pub weights: Vec<f64>,
}

impl CurveGeometry {
    pub fn new(curve: &DiscreteCurve) -> Self {
        let n = curve.len();
        let derivative = derivative(curve.points());
        let speed: Vec<f64> = derivative.iter().map(|d| d.norm()).collect();
        let total: f64 = speed.iter().sum();
        let length = total / n as f64;

        let mut xi = vec![0.0; n];
        let mut weights = vec![0.0; n];
        if total > 0.0 {
            // trapezoidal cumulative sum; the full period sums to exactly `total`
            let mut acc = 0.0;
            for i in 1..n {
                acc += 0.5 * (speed[i - 1] + speed[i]);
                xi[i] = acc / total;
            }
            for (w, s) in weights.iter_mut().zip(&speed) {
                *w = s / total;
            }
        }
        CurveGeometry {
            derivative,
            speed,
            length,
            xi,
            weights,
        }
    }

    /// Geometry of a curve already sampled at constant speed: `ξ_i = i/N`
    /// and uniform weights. This is the parametrisation in which the kernel
    /// matrix is circulant.
    pub fn constant_speed(curve: &DiscreteCurve) -> Self {
        let n = curve.len();
        let mut geom = Self::new(curve);
        let inv = 1.0 / n as f64;
        for (i, (x, w)) in geom.xi.iter_mut().zip(geom.weights.iter_mut()).enumerate() {
            *x = i as f64 * inv;
            *w = inv;
        }
        geom
    }

    pub fn len(&self) -> usize {
        self.speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speed.is_empty()
    }

    pub fn min_speed(&self) -> f64 {
        self.speed.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn require_immersed(&self) -> Result<()> {
        match self.speed.iter().position(|&s| !(s > 0.0)) {
            Some(index) => Err(Error::NotImmersed { index }),
            None => Ok(()),
        }
    }
}

/// Exact derivative of the discrete length along the variation `v`:
/// `(1/N) Σ ⟨γ′_i, v′_i⟩ / |γ′_i|`.
pub fn length_differential(geom: &CurveGeometry, v: &[Vec2]) -> Result<f64> {
    geom.require_immersed()?;
    if v.len() != geom.len() {
        return Err(Error::InvalidArgument(format!(
            "variation has {} samples, curve has {}",
            v.len(),
            geom.len()
        )));
    }
    let dv = derivative(v);
    let n = geom.len() as f64;
    Ok(geom
        .derivative
        .iter()
        .zip(&geom.speed)
        .zip(&dv)
        .map(|((&d, &s), &w)| d.dot(w) / s)
        .sum::<f64>()
        / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rel(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol * b.abs(), "{a} vs {b} (tol {tol})");
    }

    /// Limaçon `r = ½ + cos θ`, which has an inner loop.
    fn limacon(n: usize) -> DiscreteCurve {
        DiscreteCurve::new(
            (0..n)
                .map(|i| {
                    let t = TAU * i as f64 / n as f64;
                    let r = 0.5 + t.cos();
                    Vec2::new(r * t.cos(), r * t.sin())
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn constructors() {
        let c = DiscreteCurve::circle(1.0, 8).unwrap();
        assert_eq!(c.points()[0], Vec2::new(1.0, 0.0));
        assert_eq!(c.points()[2], Vec2::new(0.0, 1.0));
        assert_eq!(c.points()[4], Vec2::new(-1.0, 0.0));
        assert_eq!(c.points()[6], Vec2::new(0.0, -1.0));
        assert_eq!(DiscreteCurve::star(3, 0.0, 64).unwrap(), DiscreteCurve::circle(1.0, 64).unwrap());
        assert_eq!(
            DiscreteCurve::ellipse(1.0, 1.0, 64).unwrap(),
            DiscreteCurve::circle(1.0, 64).unwrap()
        );
        assert!(DiscreteCurve::circle(1.0, 4).is_err());
        assert!(DiscreteCurve::circle(0.0, 16).is_err());
        assert!(DiscreteCurve::new(vec![Vec2::new(f64::NAN, 0.0); 16]).is_err());
    }

    #[test]
    fn quarter_turn_samples_are_exact() {
        let pts: Vec<_> = (0..4).map(|i| unit_angle(i, 4)).collect();
        assert_eq!(pts, vec![(0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0)]);
    }

    #[test]
    fn circle_geometry() {
        let n = 256;
        let g = DiscreteCurve::circle(1.0, n).unwrap().geometry();
        assert_rel(g.length, TAU, 1e-3);
        for (i, &x) in g.xi.iter().enumerate() {
            assert!((x - i as f64 / n as f64).abs() < 1e-12);
        }
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_rel(DiscreteCurve::circle(1.0, 1024).unwrap().length(), TAU, 1e-5);
    }

    #[test]
    fn constant_map_has_zero_length() {
        let c = DiscreteCurve::new(vec![Vec2::new(0.3, -2.0); 16]).unwrap();
        let g = c.geometry();
        assert_eq!(g.length, 0.0);
        assert!(g.weights.iter().all(|&w| w == 0.0));
        assert!(c.curvature().is_err());
        assert!(matches!(
            c.resample_constant_speed(16),
            Err(Error::DegenerateCurve { .. })
        ));
    }

    #[test]
    fn square_perimeter_with_corner_error() {
        // each corner sample sees a chord of length √2 h instead of 2h,
        // an O(1/N) deficit of (2 − √2)/N per corner
        let k = 64;
        let side = 2.0;
        let mut pts = Vec::new();
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        for c in 0..4 {
            let (x0, y0) = corners[c];
            let (x1, y1) = corners[(c + 1) % 4];
            for j in 0..k {
                let t = j as f64 / k as f64;
                pts.push(Vec2::new(x0 + t * (x1 - x0), y0 + t * (y1 - y0)));
            }
        }
        let n = pts.len() as f64;
        let len = DiscreteCurve::new(pts).unwrap().length();
        let h_len = side / k as f64 * n; // |γ′| on straight runs
        let expected = 4.0 * side - 4.0 * (2.0 - 2f64.sqrt()) * h_len / (2.0 * n);
        assert!((len - expected).abs() < 1e-12);
        assert!((len - 4.0 * side).abs() < 4.0 * side / k as f64);
    }

    #[test]
    fn length_scales_linearly() {
        let c = DiscreteCurve::star(5, 0.2, 300).unwrap();
        assert_rel(c.scaled(2.0).length(), 2.0 * c.length(), 1e-15);
    }

    #[test]
    fn curvature_examples() {
        let k = DiscreteCurve::circle(2.0, 512).unwrap().curvature().unwrap();
        for &ki in &k {
            assert_rel(ki, 0.5, 1e-3);
        }
        // ab / (a² sin² t + b² cos² t)^{3/2} at t = 0 is a/b² = 2
        let ke = DiscreteCurve::ellipse(2.0, 1.0, 2048).unwrap().curvature().unwrap();
        assert_rel(ke[0], 2.0, 1e-4);
        let c = DiscreteCurve::star(3, 0.3, 256).unwrap();
        let reflected = DiscreteCurve::new(c.points().iter().map(|p| Vec2::new(p.x, -p.y)).collect()).unwrap();
        for (a, b) in c.curvature().unwrap().iter().zip(reflected.curvature().unwrap()) {
            assert_eq!(*a, -b);
        }
    }

    #[test]
    fn convexity_predicate() {
        assert!(DiscreteCurve::circle(1.0, 64).unwrap().is_convex().unwrap());
        assert!(DiscreteCurve::ellipse(2.0, 1.0, 128).unwrap().is_convex().unwrap());
        // curvature keeps one sign on the inner loop; the tangent turns twice
        assert!(limacon(256).curvature().unwrap().iter().all(|&k| k > 0.0));
        assert_eq!(limacon(256).turning_number(), 2);
        assert!(!limacon(256).is_convex().unwrap());
        // dimpled limaçon 1.5 + cos t: simple, curvature changes sign near t = π
        let dimpled = DiscreteCurve::new(
            (0..256)
                .map(|i| {
                    let t = TAU * i as f64 / 256.0;
                    let r = 1.5 + t.cos();
                    Vec2::new(r * t.cos(), r * t.sin())
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(dimpled.turning_number(), 1);
        assert!(!dimpled.is_convex().unwrap());
        assert_eq!(DiscreteCurve::circle(1.0, 64).unwrap().scaled(-1.0).turning_number(), 1);
        assert!(!DiscreteCurve::star(3, 0.3, 256).unwrap().is_convex().unwrap());
        assert!(DiscreteCurve::star(3, 0.05, 256).unwrap().is_convex().unwrap());
    }

    #[test]
    fn resample_circle_is_identity() {
        let c = DiscreteCurve::circle(1.5, 200).unwrap();
        let r = c.resample_constant_speed(200).unwrap();
        for (a, b) in c.points().iter().zip(r.points()) {
            assert!((*a - *b).norm() < 1e-10);
        }
    }

    #[test]
    fn resample_preserves_length() {
        for c in [
            DiscreteCurve::ellipse(2.0, 1.0, 256).unwrap(),
            DiscreteCurve::star(3, 0.3, 400).unwrap(),
        ] {
            for m in [256, 512] {
                let r = c.resample_constant_speed(m).unwrap();
                assert_rel(r.length(), c.length(), 1e-3);
            }
        }
    }

    #[test]
    fn resample_equalises_ellipse_speed() {
        let r = DiscreteCurve::ellipse(2.0, 1.0, 512)
            .unwrap()
            .resample_constant_speed(512)
            .unwrap();
        let g = r.geometry();
        let max = g.speed.iter().copied().fold(0.0, f64::max);
        let min = g.min_speed();
        assert!((max - min) / g.length < 1e-2);
        // independent check: stations against a fine arc-length table of the exact ellipse
        let fine = 1 << 16;
        let mut cum = vec![0.0; fine + 1];
        for j in 0..fine {
            let t0 = TAU * j as f64 / fine as f64;
            let t1 = TAU * (j + 1) as f64 / fine as f64;
            let tm = 0.5 * (t0 + t1);
            let sp = (4.0 * tm.sin().powi(2) + tm.cos().powi(2)).sqrt();
            cum[j + 1] = cum[j] + sp * (t1 - t0);
        }
        let total = cum[fine];
        for (k, p) in r.points().iter().enumerate().step_by(37) {
            let target = total * k as f64 / 512.0;
            let j = cum.partition_point(|&c| c < target).max(1) - 1;
            let t = TAU * (j as f64 + (target - cum[j]) / (cum[j + 1] - cum[j])) / fine as f64;
            let exact = Vec2::new(2.0 * t.cos(), t.sin());
            assert!((*p - exact).norm() < 1e-3, "station {k}");
        }
    }

    #[test]
    fn geometry_is_translation_invariant() {
        let c = DiscreteCurve::star(4, 0.25, 128).unwrap();
        let g0 = c.geometry();
        let g1 = c.translated(Vec2::new(1024.0, -512.0)).geometry();
        for i in 0..c.len() {
            assert!((g0.derivative[i] - g1.derivative[i]).norm() < 1e-9);
            assert!((g0.xi[i] - g1.xi[i]).abs() < 1e-12);
        }
        assert!((g0.length - g1.length).abs() < 1e-9);
    }

    #[test]
    fn curvature_is_rotation_invariant() {
        let c = DiscreteCurve::ellipse(1.5, 0.7, 200).unwrap();
        let (s, co) = 0.7f64.sin_cos();
        let rot = DiscreteCurve::new(
            c.points().iter().map(|p| Vec2::new(co * p.x - s * p.y, s * p.x + co * p.y)).collect(),
        )
        .unwrap();
        for (a, b) in c.curvature().unwrap().iter().zip(rot.curvature().unwrap()) {
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn reparametrisation_changes_length_at_second_order() {
        // γ∘φ with φ(u) = u + ε sin(2πu)/(2π), strictly monotone for ε < 1
        let eps = 0.4;
        let errs: Vec<f64> = [128usize, 256, 512]
            .iter()
            .map(|&n| {
                let pts = (0..n)
                    .map(|i| {
                        let u = i as f64 / n as f64;
                        let phi = u + eps * (TAU * u).sin() / TAU;
                        let t = TAU * phi;
                        Vec2::new(2.0 * t.cos(), t.sin())
                    })
                    .collect();
                let warped = DiscreteCurve::new(pts).unwrap().length();
                let plain = DiscreteCurve::ellipse(2.0, 1.0, n).unwrap().length();
                (warped - plain).abs()
            })
            .collect();
        assert!(errs[1] < errs[0] / 3.0 && errs[2] < errs[1] / 3.0, "{errs:?}");
    }

    #[test]
    fn length_differential_matches_finite_difference() {
        let c = DiscreteCurve::star(3, 0.2, 128).unwrap();
        let v: Vec<Vec2> = (0..128)
            .map(|i| {
                let t = TAU * i as f64 / 128.0;
                Vec2::new((2.0 * t).cos(), 0.3 + t.sin())
            })
            .collect();
        let exact = length_differential(&c.geometry(), &v).unwrap();
        let h = 1e-6;
        let shift = |s: f64| {
            DiscreteCurve::new(c.points().iter().zip(&v).map(|(&p, &w)| p + w * s).collect())
                .unwrap()
                .length()
        };
        let fd = (shift(h) - shift(-h)) / (2.0 * h);
        assert_rel(exact, fd, 1e-7);
    }
}
