//! Bounded depth parameterization.
//!
//! Depth is represented through a unit-interval activation `x` so that the
//! decoded value is constrained to `(DEPTH_MIN, DEPTH_MAX)` by construction:
//! `D = 1 / (a x + b)` with `b = 1/DEPTH_MAX` and `a = 1/DEPTH_MIN - b`.
//! Optimizing an unconstrained pre-activation (the logit of `x`) therefore
//! never needs explicit range clamping.

use crate::error::{Error, Result};

/// Smallest representable scene depth.
pub const DEPTH_MIN: f64 = 0.1;
/// Largest representable scene depth.
pub const DEPTH_MAX: f64 = 100.0;

const B: f64 = 1.0 / DEPTH_MAX;
const A: f64 = 1.0 / DEPTH_MIN - 1.0 / DEPTH_MAX;

/// Maps a unit-interval activation to a depth in `(DEPTH_MIN, DEPTH_MAX)`.
///
/// Monotone decreasing: `x -> 0` approaches the far limit, `x -> 1` the near
/// limit. Inputs outside the open interval are a domain error.
pub fn sigmoid_to_depth(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("depth activation must lie in (0, 1), got {x}")));
    }
    Ok(1.0 / (A * x + B))
}

/// Inverse of [`sigmoid_to_depth`]; depths outside the open range are a domain error.
pub fn depth_to_sigmoid(depth: f64) -> Result<f64> {
    if !(depth.is_finite() && depth > DEPTH_MIN && depth < DEPTH_MAX) {
        return Err(Error::Domain(format!(
            "depth must lie in ({DEPTH_MIN}, {DEPTH_MAX}) to be encoded, got {depth}"
        )));
    }
    Ok((1.0 / depth - B) / A)
}

/// Decodes an unconstrained logit: `D = 1 / (A sigma(l) + B)`.
pub fn depth_from_logit(logit: f64) -> f64 {
    1.0 / (A * logistic(logit) + B)
}

/// Derivative of [`depth_from_logit`] at `logit`, via
/// `dD/dl = -A D^2 sigma'(l)`.
pub fn depth_from_logit_derivative(logit: f64) -> f64 {
    let x = logistic(logit);
    let d = 1.0 / (A * x + B);
    -A * d * d * x * (1.0 - x)
}

/// Encodes a depth as a logit; values are nudged inside the open range first
/// so that boundary depths remain representable.
pub fn logit_from_depth(depth: f64) -> f64 {
    let eps = 1e-9;
    let d = depth.clamp(DEPTH_MIN * (1.0 + eps), DEPTH_MAX * (1.0 - eps));
    let x = ((1.0 / d - B) / A).clamp(eps, 1.0 - eps);
    (x / (1.0 - x)).ln()
}

#[inline]
pub(crate) fn logistic(l: f64) -> f64 {
    1.0 / (1.0 + (-l).exp())
}
