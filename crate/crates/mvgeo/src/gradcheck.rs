//! Central finite-difference helpers for validating analytic gradients.
//!
//! The checks in this crate compare an analytic gradient component `a`
//! against a central difference `f` and require
//!
//! ```text
//! |a - f| <= tol * max(|a|, |f|, floor)
//! ```
//!
//! The floor keeps near-zero components from being judged on pure rounding
//! noise while still catching sign errors and missing terms.

use crate::error::Result;

/// Central finite difference of a scalar function at `x` with step `eps`.
pub fn central_difference<F>(mut f: F, x: f64, eps: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let hi = f(x + eps)?;
    let lo = f(x - eps)?;
    Ok((hi - lo) / (2.0 * eps))
}

/// Outcome of comparing an analytic gradient against a numeric one.
#[derive(Debug, Clone, Copy)]
pub struct GradComparison {
    /// Largest relative disagreement found.
    pub max_rel: f64,
    /// Index of the worst component.
    pub worst_index: usize,
    /// Analytic value at the worst component.
    pub worst_analytic: f64,
    /// Numeric value at the worst component.
    pub worst_numeric: f64,
    /// Number of components compared.
    pub n: usize,
}

impl GradComparison {
    pub fn within(&self, tol: f64) -> bool {
        self.max_rel <= tol
    }
}

/// Compare two gradient vectors component-wise with a relative criterion.
///
/// `floor` is the magnitude below which components are compared against the
/// floor itself rather than their own size.
pub fn compare_gradients(analytic: &[f64], numeric: &[f64], floor: f64) -> GradComparison {
    assert_eq!(
        analytic.len(),
        numeric.len(),
        "gradient vectors must have equal length"
    );
    let mut max_rel = 0.0;
    let mut worst_index = 0;
    for (i, (&a, &f)) in analytic.iter().zip(numeric.iter()).enumerate() {
        let denom = a.abs().max(f.abs()).max(floor);
        let rel = (a - f).abs() / denom;
        if rel > max_rel {
            max_rel = rel;
            worst_index = i;
        }
    }
    GradComparison {
        max_rel,
        worst_index,
        worst_analytic: analytic.get(worst_index).copied().unwrap_or(0.0),
        worst_numeric: numeric.get(worst_index).copied().unwrap_or(0.0),
        n: analytic.len(),
    }
}
