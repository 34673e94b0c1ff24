//! Pinhole projection and the per-pixel projective warp geometry.

use nalgebra::{Matrix3, Vector3};

use super::grid::{DepthMap, ImageGrid, PointCloud};
use super::intrinsics::Intrinsics;
use super::se3::PoseSE3;
use crate::error::{Error, Result};

/// Points closer to the camera plane than this are treated as behind it.
pub const Z_EPS: f64 = 1e-6;

/// Lifts pixel `(u, v)` with depth `d` into camera coordinates:
/// `((u - cx)/fx * d, (v - cy)/fy * d, d)`.
#[inline]
pub fn backproject(k: &Intrinsics, u: f64, v: f64, depth: f64) -> Vector3<f64> {
    Vector3::new((u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth)
}

/// Result of projecting a camera-space point to the image plane.
///
/// The coordinates are only meaningful when `in_front` holds; callers must
/// check the flag before using them.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub in_front: bool,
}

/// Projects a camera-space point: `u = fx x/z + cx`, `v = fy y/z + cy`,
/// `in_front = z > Z_EPS`.
#[inline]
pub fn project(k: &Intrinsics, p: &Vector3<f64>) -> Projection {
    let in_front = p[2] > Z_EPS;
    Projection { u: k.fx * p[0] / p[2] + k.cx, v: k.fy * p[1] / p[2] + k.cy, in_front }
}

/// Geometry of one source pixel pushed through a relative pose, kept in a
/// scale-free form for downstream losses.
///
/// The pixel ray is unit-depth (`r = ((u-cx)/fx, (v-cy)/fy, 1)`) and the
/// translation enters divided by the pixel depth, so the projected direction
/// is `dir = R r + t/d`. Jointly scaling all depths and the translation by a
/// common factor then cancels exactly in `dir` - and hence in the projected
/// coordinates - instead of only up to floating-point rounding.
#[derive(Debug, Clone, Copy)]
pub struct PixelProjection {
    /// `R r + t/d`; the transformed point is `d * dir`.
    pub dir: Vector3<f64>,
    /// Rotated unit-depth ray `R r` (no translation component).
    pub rot_ray: Vector3<f64>,
    /// Projected coordinates in the target image.
    pub u: f64,
    pub v: f64,
    /// Whether the transformed point lies in front of the target camera.
    pub in_front: bool,
    /// Depth of the source pixel as seen by the target camera: `d * dir.z`.
    pub synth_depth: f64,
}

/// Projects source pixel `(u, v)` with depth `d` through `(rotation, translation)`
/// into the target camera.
#[inline]
pub fn project_pixel(
    k: &Intrinsics,
    rotation: &Matrix3<f64>,
    translation: &Vector3<f64>,
    u: f64,
    v: f64,
    d: f64,
) -> PixelProjection {
    let ray = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
    let rot_ray = rotation * ray;
    let dir = Vector3::new(
        rot_ray[0] + translation[0] / d,
        rot_ray[1] + translation[1] / d,
        rot_ray[2] + translation[2] / d,
    );
    let synth_depth = d * dir[2];
    let in_front = synth_depth > Z_EPS;
    PixelProjection {
        dir,
        rot_ray,
        u: k.fx * dir[0] / dir[2] + k.cx,
        v: k.fy * dir[1] / dir[2] + k.cy,
        in_front,
        synth_depth,
    }
}

/// Equivalence of the two projection paths for one pixel.
pub fn project_pixel_via_points(k: &Intrinsics, pose: &PoseSE3, u: f64, v: f64, d: f64) -> Projection {
    project(k, &pose.transform_point(&backproject(k, u, v, d)))
}

/// Backprojects every `stride`-th valid depth pixel into a camera-space
/// point cloud, optionally picking up per-point colors from an image of the
/// same size (single-channel images are replicated to gray RGB). Pixels with
/// invalid depth are skipped, so the cloud may be empty.
pub fn point_cloud_from_depth(
    depth: &DepthMap,
    k: &Intrinsics,
    colors: Option<&ImageGrid>,
    stride: usize,
) -> Result<PointCloud> {
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    if k.width != depth.width() || k.height != depth.height() {
        return Err(Error::Data(format!(
            "intrinsics are for {}x{}, depth map is {}x{}",
            k.width,
            k.height,
            depth.width(),
            depth.height()
        )));
    }
    if let Some(image) = colors {
        if image.width() != depth.width() || image.height() != depth.height() {
            return Err(Error::Data(format!(
                "color image is {}x{}, depth map is {}x{}",
                image.width(),
                image.height(),
                depth.width(),
                depth.height()
            )));
        }
        if image.channels() != 1 && image.channels() != 3 {
            return Err(Error::Data(format!("color image must have 1 or 3 channels, got {}", image.channels())));
        }
    }
    let mut points = Vec::new();
    let mut rgb = colors.map(|_| Vec::new());
    for v in (0..depth.height()).step_by(stride) {
        for u in (0..depth.width()).step_by(stride) {
            let Some(d) = depth.get(u, v) else { continue };
            points.push(backproject(k, u as f64, v as f64, d));
            if let (Some(out), Some(image)) = (rgb.as_mut(), colors) {
                let c = if image.channels() == 3 {
                    [image.get(u, v, 0), image.get(u, v, 1), image.get(u, v, 2)]
                } else {
                    let g = image.get(u, v, 0);
                    [g, g, g]
                };
                out.push(c);
            }
        }
    }
    Ok(PointCloud { points, colors: rgb })
}
