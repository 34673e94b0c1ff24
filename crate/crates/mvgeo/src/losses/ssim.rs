//! Structural similarity over 3x3 box windows.
//!
//! Statistics are plain (population) moments over the nine pixels; a window
//! only counts when it lies fully inside the image, so the map carries its
//! own validity mask instead of padding at the borders.

use crate::error::{Error, Result};
use crate::geometry::{ImageGrid, PixelMask};

/// Stabilizer of the luminance term (for values in [0, 1]).
pub const SSIM_C1: f64 = 1e-4;
/// Stabilizer of the contrast term.
pub const SSIM_C2: f64 = 9e-4;

/// Guard against zero-variance windows in the correlation variant.
pub(crate) const NCC_EPS: f64 = 1e-12;

pub(crate) const WINDOW_N: f64 = 9.0;

/// Per-window moments of a channel pair.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct WindowStats {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov: f64,
}

/// Moments of channel `c` over the 3x3 windows centered at `(u, v)`;
/// the caller guarantees the window is inside both images.
pub(crate) fn window_stats(x: &ImageGrid, y: &ImageGrid, c: usize, u: usize, v: usize) -> WindowStats {
    let mut sx = 0.0;
    let mut sy = 0.0;
    for dv in 0..3 {
        for du in 0..3 {
            sx += x.get(u + du - 1, v + dv - 1, c);
            sy += y.get(u + du - 1, v + dv - 1, c);
        }
    }
    let mean_x = sx / WINDOW_N;
    let mean_y = sy / WINDOW_N;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for dv in 0..3 {
        for du in 0..3 {
            let dx = x.get(u + du - 1, v + dv - 1, c) - mean_x;
            let dy = y.get(u + du - 1, v + dv - 1, c) - mean_y;
            var_x += dx * dx;
            var_y += dy * dy;
            cov += dx * dy;
        }
    }
    WindowStats { mean_x, mean_y, var_x: var_x / WINDOW_N, var_y: var_y / WINDOW_N, cov: cov / WINDOW_N }
}

#[inline]
pub(crate) fn ssim_from_stats(s: &WindowStats) -> f64 {
    let a1 = 2.0 * s.mean_x * s.mean_y + SSIM_C1;
    let a2 = 2.0 * s.cov + SSIM_C2;
    let b1 = s.mean_x * s.mean_x + s.mean_y * s.mean_y + SSIM_C1;
    let b2 = s.var_x + s.var_y + SSIM_C2;
    (a1 * a2) / (b1 * b2)
}

#[inline]
pub(crate) fn ncc_from_stats(s: &WindowStats) -> f64 {
    s.cov / (s.var_x * s.var_y + NCC_EPS).sqrt()
}

/// Derivative of the window's SSIM with respect to the `y` pixel at window
/// offset `(du, dv)` (values `x_q`, `y_q` are that pixel's intensities).
#[inline]
pub(crate) fn ssim_derivative_wrt_y(s: &WindowStats, ssim: f64, x_q: f64, y_q: f64) -> f64 {
    let a1 = 2.0 * s.mean_x * s.mean_y + SSIM_C1;
    let a2 = 2.0 * s.cov + SSIM_C2;
    let b1 = s.mean_x * s.mean_x + s.mean_y * s.mean_y + SSIM_C1;
    let b2 = s.var_x + s.var_y + SSIM_C2;
    let da1 = 2.0 * s.mean_x / WINDOW_N;
    let da2 = 2.0 * (x_q - s.mean_x) / WINDOW_N;
    let db1 = 2.0 * s.mean_y / WINDOW_N;
    let db2 = 2.0 * (y_q - s.mean_y) / WINDOW_N;
    (da1 * a2 + a1 * da2 - ssim * (db1 * b2 + b1 * db2)) / (b1 * b2)
}

/// Derivative of the window's NCC with respect to the `y` pixel value `y_q`.
#[inline]
pub(crate) fn ncc_derivative_wrt_y(s: &WindowStats, x_q: f64, y_q: f64) -> f64 {
    let denom = (s.var_x * s.var_y + NCC_EPS).sqrt();
    // d cov / d y_q = (x_q - mean_x)/N, d var_y / d y_q = 2 (y_q - mean_y)/N.
    let dc = (x_q - s.mean_x) / WINDOW_N;
    let dv = 2.0 * (y_q - s.mean_y) / WINDOW_N;
    dc / denom - s.cov * s.var_x * dv / (2.0 * denom * denom * denom)
}

fn similarity_map(
    x: &ImageGrid,
    y: &ImageGrid,
    score: impl Fn(&WindowStats) -> f64,
) -> Result<(Vec<f64>, PixelMask)> {
    if !x.same_shape(y) {
        return Err(Error::Data(format!(
            "images differ in shape: {}x{}x{} vs {}x{}x{}",
            x.width(),
            x.height(),
            x.channels(),
            y.width(),
            y.height(),
            y.channels()
        )));
    }
    let (w, h, c) = (x.width(), x.height(), x.channels());
    let mut map = vec![0.0; w * h];
    let mut mask = PixelMask::filled(w, h, false);
    if w < 3 || h < 3 {
        return Ok((map, mask));
    }
    for v in 1..h - 1 {
        for u in 1..w - 1 {
            let mut acc = 0.0;
            for ch in 0..c {
                acc += score(&window_stats(x, y, ch, u, v));
            }
            map[v * w + u] = acc / c as f64;
            mask.set(u, v, true);
        }
    }
    Ok((map, mask))
}

/// Per-pixel SSIM between two images, averaged over channels, with a mask of
/// pixels whose window lies fully inside the image.
pub fn ssim_map(x: &ImageGrid, y: &ImageGrid) -> Result<(Vec<f64>, PixelMask)> {
    similarity_map(x, y, ssim_from_stats)
}

/// Per-pixel normalized cross-correlation over the same windows.
pub fn ncc_map(x: &ImageGrid, y: &ImageGrid) -> Result<(Vec<f64>, PixelMask)> {
    similarity_map(x, y, ncc_from_stats)
}
