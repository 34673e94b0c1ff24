//! Forward view synthesis: warping a source image / depth map into a
//! reference view through a relative pose.

use crate::error::{Error, Result};

use super::camera::project_pixel;
use super::grid::{DepthMap, ImageGrid, PixelMask};
use super::intrinsics::Intrinsics;
use super::se3::PoseSE3;

/// Synthesizes the reference view from the source image.
///
/// For every pixel of the reference frame with valid depth, the pixel is
/// lifted, transformed by `pose` (reference to source), projected into the
/// source image and bilinearly sampled. The returned mask marks pixels where
/// the transformed point is in front of the source camera and the sample
/// footprint lies fully inside the source image; everything else holds 0.
pub fn warp_image(
    source: &ImageGrid,
    ref_depth: &DepthMap,
    pose: &PoseSE3,
    k: &Intrinsics,
) -> Result<(ImageGrid, PixelMask)> {
    check_shapes(source.width(), source.height(), ref_depth, k)?;
    let (w, h, c) = (source.width(), source.height(), source.channels());
    let mut data = vec![0.0; w * h * c];
    let mut mask = PixelMask::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            let Some(d) = ref_depth.get(u, v) else { continue };
            let proj = project_pixel(k, pose.rotation(), pose.translation(), u as f64, v as f64, d);
            if !proj.in_front {
                continue;
            }
            let mut ok = true;
            let mut px = [0.0; 3];
            for ch in 0..c {
                match source.sample_channel(ch, proj.u, proj.v) {
                    // The sample is a convex combination of values in [0, 1];
                    // clamp away any one-ulp rounding overshoot.
                    Some(s) => px[ch] = s.value.clamp(0.0, 1.0),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                for ch in 0..c {
                    data[(v * w + u) * c + ch] = px[ch];
                }
                mask.set(u, v, true);
            }
        }
    }
    Ok((ImageGrid::new(w, h, c, data)?, mask))
}

/// The two depth observations compared by the geometric consistency check.
#[derive(Debug, Clone)]
pub struct SynthesizedDepth {
    /// Reference depth pushed into the source view (`d * dir.z` per pixel).
    pub synthesized: Vec<f64>,
    /// Source depth map bilinearly sampled at the projected coordinates.
    pub interpolated: Vec<f64>,
    /// Pixels where both observations exist.
    pub valid: PixelMask,
    pub width: usize,
    pub height: usize,
}

/// Computes, for every reference pixel, the depth it should have in the
/// source view and the depth the source map actually predicts there.
pub fn synthesize_depth(
    ref_depth: &DepthMap,
    src_depth: &DepthMap,
    pose: &PoseSE3,
    k: &Intrinsics,
) -> Result<SynthesizedDepth> {
    if !ref_depth.same_shape(src_depth) {
        return Err(Error::Data(format!(
            "depth maps differ in size: {}x{} vs {}x{}",
            ref_depth.width(),
            ref_depth.height(),
            src_depth.width(),
            src_depth.height()
        )));
    }
    check_shapes(ref_depth.width(), ref_depth.height(), ref_depth, k)?;
    let (w, h) = (ref_depth.width(), ref_depth.height());
    let mut synthesized = vec![0.0; w * h];
    let mut interpolated = vec![0.0; w * h];
    let mut valid = PixelMask::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            let Some(d) = ref_depth.get(u, v) else { continue };
            let proj = project_pixel(k, pose.rotation(), pose.translation(), u as f64, v as f64, d);
            if !proj.in_front {
                continue;
            }
            let Some(s) = src_depth.sample(proj.u, proj.v) else { continue };
            synthesized[v * w + u] = proj.synth_depth;
            interpolated[v * w + u] = s.value;
            valid.set(u, v, true);
        }
    }
    Ok(SynthesizedDepth { synthesized, interpolated, valid, width: w, height: h })
}

fn check_shapes(w: usize, h: usize, depth: &DepthMap, k: &Intrinsics) -> Result<()> {
    if depth.width() != w || depth.height() != h {
        return Err(Error::Data(format!(
            "depth map is {}x{}, image is {w}x{h}",
            depth.width(),
            depth.height()
        )));
    }
    if k.width != w || k.height != h {
        return Err(Error::Data(format!(
            "intrinsics are for {}x{}, image is {w}x{h}",
            k.width, k.height
        )));
    }
    Ok(())
}
