//! Numerical engine for the homogeneous Sobolev `H¹_{λ,a}` gradient flow of
//! the length functional on closed plane curves.
//!
//! The gradient of length in this metric family is an arc-length convolution
//! against the periodic Green's function of `λ²∂² − 1`, so the flow is a
//! nonlocal ODE in the sample points of a curve. The crate is organised as:
//!
//! - [`kernel`]: the periodic Green's function and its integral identity.
//! - [`curve`]: discrete closed curves, arc length, curvature, resampling.
//! - [`gradient`]: the γ-convolution, gradient, flow velocity, metric, and
//!   the circulant (FFT) fast path.
//! - [`flow`]: embedded Runge–Kutta time integration, extinction detection,
//!   and the time reparametrisation between exponents `a` and `2`.
//! - [`analysis`]: closed-form circle solutions and invariant checkers.
//! - [`config`], [`io`], [`render`]: command-line configuration, file
//!   formats, and SVG frames.

pub mod analysis;
pub mod config;
pub mod curve;
pub mod error;
pub mod flow;
pub mod gradient;
pub mod io;
pub mod kernel;
pub mod render;
mod vec2;

pub use crate::curve::{CurveGeometry, DiscreteCurve};
pub use crate::error::{Error, Result};
pub use crate::flow::{FlowState, StepControl, Trajectory};
pub use crate::gradient::{FlowParams, KernelMatrix};
pub use crate::kernel::KernelParams;
pub use crate::vec2::Vec2;
