//! Forward-backward depth consistency.
//!
//! Each reference pixel predicts a depth in the source view (its transformed
//! z) which is compared against the source depth map interpolated at the
//! projected location. The per-pixel discrepancy is the symmetric relative
//! difference `|a - b| / (a + b)`, which lives in `[0, 1)` regardless of the
//! absolute depth scale.

use crate::error::{Error, Result};
use crate::geometry::{project_pixel, DepthMap, Intrinsics, PixelMask, PoseSE3};

/// Symmetric relative difference of two positive depths: `|a - b| / (a + b)`.
#[inline]
pub fn relative_depth_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a + b)
}

/// Per-pixel depth discrepancy between a reference map pushed into the source
/// view and the source map itself.
#[derive(Debug, Clone)]
pub struct DepthInconsistency {
    pub map: Vec<f64>,
    pub valid: PixelMask,
    pub width: usize,
    pub height: usize,
}

/// Computes the per-pixel discrepancy map.
///
/// Internally the comparison is evaluated on the depth ratio
/// `rho = synthesized / interpolated` as `|rho - 1| / (rho + 1)`, which is
/// algebraically the same as `|a - b|/(a + b)` but cancels a common depth /
/// translation scale exactly instead of up to rounding.
pub fn depth_inconsistency(
    ref_depth: &DepthMap,
    src_depth: &DepthMap,
    pose: &PoseSE3,
    k: &Intrinsics,
) -> Result<DepthInconsistency> {
    if !ref_depth.same_shape(src_depth) {
        return Err(Error::Data(format!(
            "depth maps differ in size: {}x{} vs {}x{}",
            ref_depth.width(),
            ref_depth.height(),
            src_depth.width(),
            src_depth.height()
        )));
    }
    if k.width != ref_depth.width() || k.height != ref_depth.height() {
        return Err(Error::Data(format!(
            "intrinsics are for {}x{}, depth is {}x{}",
            k.width,
            k.height,
            ref_depth.width(),
            ref_depth.height()
        )));
    }
    let (w, h) = (ref_depth.width(), ref_depth.height());
    let mut map = vec![0.0; w * h];
    let mut valid = PixelMask::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            let Some(d) = ref_depth.get(u, v) else { continue };
            let proj = project_pixel(k, pose.rotation(), pose.translation(), u as f64, v as f64, d);
            if !proj.in_front {
                continue;
            }
            // Interpolate the source depth divided by the reference depth, so
            // the ratio below is independent of a joint scale.
            let Some(scaled) = src_depth.sample_over(proj.u, proj.v, d) else { continue };
            let rho = proj.dir[2] / scaled;
            map[v * w + u] = (rho - 1.0).abs() / (rho + 1.0);
            valid.set(u, v, true);
        }
    }
    Ok(DepthInconsistency { map, valid, width: w, height: h })
}

/// Mean discrepancy over the valid set; an empty set is a no-overlap error.
pub fn geometry_consistency_loss(diff: &DepthInconsistency) -> Result<f64> {
    let mut acc = 0.0;
    let mut n = 0usize;
    for (i, v) in diff.valid.data().iter().enumerate() {
        if *v {
            acc += diff.map[i];
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoOverlap("depth consistency has no valid pixels".into()));
    }
    Ok(acc / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Twist;

    #[test]
    fn relative_diff_basics() {
        assert_eq!(relative_depth_diff(1.0, 3.0), 0.5);
        assert_eq!(relative_depth_diff(3.0, 1.0), 0.5);
        assert_eq!(relative_depth_diff(2.0, 2.0), 0.0);
        // Symmetry is exact, not approximate.
        for &(a, b) in &[(0.7, 11.3), (5.0, 0.21), (42.0, 41.9)] {
            assert_eq!(relative_depth_diff(a, b).to_bits(), relative_depth_diff(b, a).to_bits());
        }
    }

    #[test]
    fn relative_diff_stays_in_unit_interval() {
        for i in 1..200 {
            for j in 1..200 {
                let d = relative_depth_diff(i as f64 * 0.07, j as f64 * 0.13);
                assert!((0.0..1.0).contains(&d));
            }
        }
    }

    #[test]
    fn consistent_maps_have_zero_discrepancy() {
        let (w, h) = (12, 10);
        let d = 5.0;
        let k = Intrinsics::centered(20.0, w, h).unwrap();
        let tz = 0.75;
        let pose = PoseSE3::exp(&Twist::new(0.0, 0.0, tz, 0.0, 0.0, 0.0));
        // Source map holds exactly the depth the reference predicts.
        let ref_depth = DepthMap::constant(w, h, d).unwrap();
        let src_depth = DepthMap::constant(w, h, d + tz).unwrap();
        let diff = depth_inconsistency(&ref_depth, &src_depth, &pose, &k).unwrap();
        assert!(diff.valid.count() > 0);
        let loss = geometry_consistency_loss(&diff).unwrap();
        assert!(loss < 1e-12, "loss {loss}");
    }

    #[test]
    fn mismatched_scale_gives_the_expected_ratio_value() {
        let (w, h) = (8, 8);
        let k = Intrinsics::centered(16.0, w, h).unwrap();
        let ref_depth = DepthMap::constant(w, h, 2.0).unwrap();
        let src_depth = DepthMap::constant(w, h, 6.0).unwrap();
        let diff = depth_inconsistency(&ref_depth, &src_depth, &PoseSE3::identity(), &k).unwrap();
        // Synthesized 2 vs interpolated 6: |2-6|/(2+6) = 0.5.
        for (i, ok) in diff.valid.data().iter().enumerate() {
            if *ok {
                assert!((diff.map[i] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn no_valid_pixels_is_a_no_overlap_error() {
        let (w, h) = (6, 6);
        let k = Intrinsics::centered(10.0, w, h).unwrap();
        let ref_depth = DepthMap::constant(w, h, 1.0).unwrap();
        let src_depth = DepthMap::constant(w, h, 1.0).unwrap();
        // Move everything far behind the source camera.
        let pose = PoseSE3::exp(&Twist::new(0.0, 0.0, -5.0, 0.0, 0.0, 0.0));
        let diff = depth_inconsistency(&ref_depth, &src_depth, &pose, &k).unwrap();
        assert!(matches!(geometry_consistency_loss(&diff), Err(Error::NoOverlap(_))));
    }
}
