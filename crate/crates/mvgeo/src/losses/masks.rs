//! Per-pixel masks that protect the photometric loss from dynamic objects
//! and occlusions.

use crate::error::{Error, Result};
use crate::geometry::{ImageGrid, PixelMask};

use super::geometry_consistency::DepthInconsistency;

/// Keeps a pixel only where warping explains the reference image strictly
/// better than not moving at all: `|I_a - warped| < |I_a - I_b|` (channel-mean
/// L1, strict comparison). On a static pair the mask is therefore empty.
pub fn auto_mask(
    image_a: &ImageGrid,
    image_b: &ImageGrid,
    warped: &ImageGrid,
    valid: &PixelMask,
) -> Result<PixelMask> {
    if !image_a.same_shape(image_b) || !image_a.same_shape(warped) {
        return Err(Error::Data("auto-mask inputs differ in shape".into()));
    }
    let (w, h) = (image_a.width(), image_a.height());
    if valid.width() != w || valid.height() != h {
        return Err(Error::Data("auto-mask validity differs in shape".into()));
    }
    let mut mask = PixelMask::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            if valid.get(u, v) && image_a.pixel_l1(warped, u, v) < image_a.pixel_l1(image_b, u, v) {
                mask.set(u, v, true);
            }
        }
    }
    Ok(mask)
}

/// Soft weight in `(0, 1]` per valid pixel: `1 - discrepancy`. Inconsistent
/// geometry (dynamic objects, occlusions) approaches 0, agreement approaches 1.
pub fn self_discovered_mask(diff: &DepthInconsistency) -> Vec<f64> {
    diff.map
        .iter()
        .zip(diff.valid.data())
        .map(|(d, ok)| if *ok { 1.0 - d } else { 0.0 })
        .collect()
}
