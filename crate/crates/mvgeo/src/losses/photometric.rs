//! Photometric matching cost between a reference image and a view
//! synthesized from another frame.

use crate::error::{Error, Result};
use crate::geometry::{ImageGrid, PixelMask};

use super::ssim::{ncc_from_stats, ssim_from_stats, window_stats};
use super::weights::{LossWeights, PhotometricKind};

/// Result of the per-pixel photometric cost.
#[derive(Debug, Clone)]
pub struct PhotometricLoss {
    /// Mean cost over the support.
    pub value: f64,
    /// Per-pixel cost, zero outside the support.
    pub map: Vec<f64>,
    /// Pixels that entered the mean: valid warp results whose 3x3 structural
    /// window lies fully inside the image and fully inside the valid set.
    pub support: PixelMask,
}

/// Blended photometric cost
/// `lambda * L1 + (1 - lambda) * (1 - similarity) / 2` per pixel, averaged
/// over the support. L1 is the channel-mean absolute difference, so each
/// per-pixel value lies in `[0, 1]`.
///
/// An empty valid set, or one without a single interior pixel with full
/// structural support, is a no-overlap error.
pub fn photometric_loss(
    image_a: &ImageGrid,
    warped: &ImageGrid,
    valid: &PixelMask,
    weights: &LossWeights,
    kind: PhotometricKind,
) -> Result<PhotometricLoss> {
    if !image_a.same_shape(warped) {
        return Err(Error::Data("photometric inputs differ in shape".into()));
    }
    let (w, h, c) = (image_a.width(), image_a.height(), image_a.channels());
    if valid.width() != w || valid.height() != h {
        return Err(Error::Data("photometric validity differs in shape".into()));
    }
    if valid.count() == 0 {
        return Err(Error::NoOverlap("warp produced no valid pixels".into()));
    }
    let support = structural_support(valid);
    let mut map = vec![0.0; w * h];
    let mut acc = 0.0;
    let mut n = 0usize;
    for v in 0..h {
        for u in 0..w {
            if !support.get(u, v) {
                continue;
            }
            let l1 = image_a.pixel_l1(warped, u, v);
            let mut sim = 0.0;
            for ch in 0..c {
                let stats = window_stats(image_a, warped, ch, u, v);
                sim += match kind {
                    PhotometricKind::Ssim => ssim_from_stats(&stats),
                    PhotometricKind::Ncc => ncc_from_stats(&stats),
                };
            }
            sim /= c as f64;
            let cost = weights.lambda * l1 + (1.0 - weights.lambda) * (1.0 - sim) / 2.0;
            map[v * w + u] = cost;
            acc += cost;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoOverlap(
            "no pixel has a full structural window inside the valid set".into(),
        ));
    }
    Ok(PhotometricLoss { value: acc / n as f64, map, support })
}

/// Pixels of `valid` whose full 3x3 neighbourhood is inside the image and
/// inside `valid`.
pub(crate) fn structural_support(valid: &PixelMask) -> PixelMask {
    let (w, h) = (valid.width(), valid.height());
    let mut out = PixelMask::filled(w, h, false);
    if w < 3 || h < 3 {
        return out;
    }
    for v in 1..h - 1 {
        'pixels: for u in 1..w - 1 {
            for dv in 0..3 {
                for du in 0..3 {
                    if !valid.get(u + du - 1, v + dv - 1) {
                        continue 'pixels;
                    }
                }
            }
            out.set(u, v, true);
        }
    }
    out
}

/// Weighted mean of the photometric cost over the pixels that survive the
/// binary mask: `mean over {support and keep} of soft_weight * cost`.
///
/// The soft weight is treated as data (no gradient is associated with it) and
/// an empty surviving set is a fully-masked error.
pub fn masked_photometric_loss(
    photometric: &PhotometricLoss,
    soft_weight: &[f64],
    keep: &PixelMask,
) -> Result<f64> {
    let support = &photometric.support;
    let (w, h) = (support.width(), support.height());
    if soft_weight.len() != w * h || keep.width() != w || keep.height() != h {
        return Err(Error::Data("mask shapes do not match the photometric map".into()));
    }
    let mut acc = 0.0;
    let mut n = 0usize;
    for i in 0..w * h {
        if support.at(i) && keep.at(i) {
            acc += soft_weight[i] * photometric.map[i];
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::FullyMasked("no pixel survives the photometric masks".into()));
    }
    Ok(acc / n as f64)
}
