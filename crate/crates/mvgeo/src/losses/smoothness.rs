//! Edge-aware depth smoothness.
//!
//! Forward differences of the depth map are penalized quadratically, each
//! attenuated by `exp(-g)` where `g` is the channel-mean absolute image
//! gradient in the same direction, so depth discontinuities are cheap where
//! the image itself has edges. The sum is normalized by the pixel count.

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, ImageGrid};
use crate::util::KahanSum;

pub fn smoothness_loss(depth: &DepthMap, image: &ImageGrid) -> Result<f64> {
    smoothness_forward(depth, image, None)
}

/// Shared forward pass; when `grad` is given, `scale * d(loss)/d(depth)` is
/// accumulated into it (the buffer is not cleared).
pub(crate) fn smoothness_forward(
    depth: &DepthMap,
    image: &ImageGrid,
    grad: Option<(&mut [f64], f64)>,
) -> Result<f64> {
    let (w, h) = (depth.width(), depth.height());
    if image.width() != w || image.height() != h {
        return Err(Error::Data(format!(
            "smoothness inputs differ in size: depth {}x{}, image {}x{}",
            w,
            h,
            image.width(),
            image.height()
        )));
    }
    let c = image.channels();
    let n = (w * h) as f64;
    let mut acc = KahanSum::new();
    let mut grad = grad;
    for v in 0..h {
        for u in 0..w {
            // Horizontal forward difference.
            if u + 1 < w {
                if let (Some(d0), Some(d1)) = (depth.get(u, v), depth.get(u + 1, v)) {
                    let mut g = 0.0;
                    for ch in 0..c {
                        g += (image.get(u + 1, v, ch) - image.get(u, v, ch)).abs();
                    }
                    let weight = (-g / c as f64).exp();
                    let term = weight * (d1 - d0);
                    acc.add(term * term);
                    if let Some((buf, scale)) = grad.as_mut() {
                        let d = 2.0 * weight * weight * (d1 - d0) / n * *scale;
                        buf[v * w + u] -= d;
                        buf[v * w + u + 1] += d;
                    }
                }
            }
            // Vertical forward difference.
            if v + 1 < h {
                if let (Some(d0), Some(d1)) = (depth.get(u, v), depth.get(u, v + 1)) {
                    let mut g = 0.0;
                    for ch in 0..c {
                        g += (image.get(u, v + 1, ch) - image.get(u, v, ch)).abs();
                    }
                    let weight = (-g / c as f64).exp();
                    let term = weight * (d1 - d0);
                    acc.add(term * term);
                    if let Some((buf, scale)) = grad.as_mut() {
                        let d = 2.0 * weight * weight * (d1 - d0) / n * *scale;
                        buf[v * w + u] -= d;
                        buf[(v + 1) * w + u] += d;
                    }
                }
            }
        }
    }
    Ok(acc.value() / n)
}
