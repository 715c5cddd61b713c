//! Runge–Kutta–Fehlberg 4(5): fourth-order propagation with a fifth-order
//! companion used only for the error estimate.

const C: [f64; 6] = [0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5];

const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];

const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];

const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

pub(crate) const ORDER: i32 = 4;

/// Why a step could not be completed.
#[derive(Debug)]
pub(crate) enum StepFailure<E> {
    /// The right-hand side returned an error at this stage.
    Rhs { stage: usize, error: E },
    /// A stage produced non-finite values.
    NonFinite { stage: usize },
}

pub(crate) struct Embedded {
    pub y: Vec<f64>,
    /// Componentwise difference between the fifth- and fourth-order solutions.
    pub err: Vec<f64>,
}

/// One embedded step of size `dt` from `(t, y)`.
pub(crate) fn step<F, E>(rhs: &mut F, t: f64, y: &[f64], dt: f64) -> Result<Embedded, StepFailure<E>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
{
    let n = y.len();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(6);
    let mut stage_y = vec![0.0; n];
    for s in 0..6 {
        stage_y.copy_from_slice(y);
        for (j, kj) in k.iter().enumerate() {
            let coef = dt * A[s][j];
            if coef != 0.0 {
                for (v, d) in stage_y.iter_mut().zip(kj) {
                    *v += coef * d;
                }
            }
        }
        let ks = rhs(t + C[s] * dt, &stage_y).map_err(|error| StepFailure::Rhs { stage: s, error })?;
        if ks.iter().any(|v| !v.is_finite()) {
            return Err(StepFailure::NonFinite { stage: s });
        }
        k.push(ks);
    }

    let mut out = y.to_vec();
    let mut err = vec![0.0; n];
    for s in 0..6 {
        let b4 = dt * B4[s];
        let e = dt * (B5[s] - B4[s]);
        for i in 0..n {
            out[i] += b4 * k[s][i];
            err[i] += e * k[s][i];
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(StepFailure::NonFinite { stage: 6 });
    }
    Ok(Embedded { y: out, err })
}

/// Proportional step-size controller.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Controller {
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
}

impl Default for Controller {
    fn default() -> Self {
        Controller {
            safety: 0.9,
            min_factor: 0.2,
            max_factor: 5.0,
        }
    }
}

impl Controller {
    /// Multiplier for the next step given `ratio = error / tolerance`.
    pub fn factor(&self, ratio: f64) -> f64 {
        if ratio <= 0.0 {
            return self.max_factor;
        }
        (self.safety * ratio.powf(-1.0 / (ORDER as f64 + 1.0))).clamp(self.min_factor, self.max_factor)
    }
}
