//! Small numerical utilities shared across modules.

/// Neumaier-compensated accumulator.
///
/// The loss terms are means over thousands of tiny per-pixel contributions;
/// naive summation leaves enough rounding error to pollute central
/// finite-difference checks at step 1e-4. Compensated summation keeps the
/// reduction error near one ulp of the result regardless of length.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Median with the even-length midpoint convention. Sorts `xs` in place.
pub(crate) fn median_of(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty(), "median of an empty slice");
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
