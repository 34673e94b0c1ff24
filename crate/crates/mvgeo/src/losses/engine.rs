//! Fused evaluation of the training objective with analytic gradients.
//!
//! One call warps the source view into the reference frame, evaluates the
//! masked photometric term, the edge-aware smoothness term and the depth
//! consistency term, combines them as
//! `total = alpha * photometric + beta * smoothness + gamma * geometry`,
//! and back-propagates the scalar into both depth maps and the relative pose.
//!
//! Gradient conventions:
//! - depth gradients are with respect to the raw per-pixel depths;
//! - the pose gradient lives in the left tangent space at the current pose:
//!   it is the derivative of the total under `pose <- exp(xi) * pose` with the
//!   twist ordered `[linear, angular]`;
//! - the occlusion masks (binary and soft) are treated as constants of the
//!   backward pass: the loss is differentiated through the image warp and the
//!   depth ratio but not through mask membership.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{
    project_pixel, BilinearFootprint, BilinearSample, DepthMap, ImageGrid, Intrinsics, PixelMask,
    PoseSE3, Twist,
};
use crate::util::KahanSum;

use super::masks::auto_mask;
use super::photometric::structural_support;
use super::smoothness::smoothness_forward;
use super::ssim::{
    ncc_derivative_wrt_y, ncc_from_stats, ssim_derivative_wrt_y, ssim_from_stats, window_stats,
    WindowStats,
};
use super::weights::{LossOptions, LossWeights, PhotometricKind};

/// The two views and the geometry tying them together.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    /// Reference image (the frame whose depth is `depth_a`).
    pub image_a: &'a ImageGrid,
    /// Source image that gets warped into the reference frame.
    pub image_b: &'a ImageGrid,
    /// Depth of the reference frame.
    pub depth_a: &'a DepthMap,
    /// Depth of the source frame.
    pub depth_b: &'a DepthMap,
    /// Pose mapping reference-camera points into the source camera.
    pub pose_ab: &'a PoseSE3,
    pub intrinsics: &'a Intrinsics,
}

/// Externally fixed masks, used to evaluate the objective with the occlusion
/// masks frozen at some reference state (finite-difference checks, staged
/// mask schedules).
#[derive(Debug, Clone, Copy)]
pub struct MaskOverride<'a> {
    /// Replaces the brightness-comparison mask.
    pub keep: &'a PixelMask,
    /// Replaces the per-pixel soft weight of the photometric mean.
    pub soft_weight: &'a [f64],
}

/// Everything produced by one objective evaluation.
#[derive(Debug, Clone)]
pub struct LossBundle {
    /// `alpha * photometric + beta * smoothness + gamma * geometry`.
    pub total: f64,
    /// Masked, weighted photometric mean.
    pub photometric: f64,
    /// Edge-aware smoothness of the reference depth.
    pub smoothness: f64,
    /// Mean relative depth discrepancy.
    pub geometry: f64,
    /// Warped source image (zeros outside `valid`).
    pub warped: ImageGrid,
    /// Pixels whose warp is usable: transformed point in front, image sample
    /// footprint inside the source image, all four source-depth taps valid.
    pub valid: PixelMask,
    /// Pixels (within `valid`) where warping beats not moving at all; equals
    /// `valid` when the brightness comparison is disabled.
    pub auto_mask: PixelMask,
    /// Pixels entering the photometric mean.
    pub photo_support: PixelMask,
    /// Pixels entering the geometry mean.
    pub geo_support: PixelMask,
    /// Unweighted per-pixel photometric cost (on the structural support).
    pub photometric_map: Vec<f64>,
    /// Per-pixel relative depth discrepancy in [0, 1) (on `valid`).
    pub d_diff_map: Vec<f64>,
    /// Soft weight `1 - d_diff` (on `valid`).
    pub self_mask: Vec<f64>,
    /// d(total)/d(depth_a) per pixel.
    pub grad_depth_a: Vec<f64>,
    /// d(total)/d(depth_b) per pixel.
    pub grad_depth_b: Vec<f64>,
    /// d(total)/d(xi) for `pose_ab <- exp(xi) * pose_ab`, `[linear, angular]`.
    pub grad_twist: Twist,
    pub width: usize,
    pub height: usize,
}

/// Per-pixel state of the warp kept between the forward and backward passes.
#[derive(Clone, Copy)]
struct PixelRecord {
    valid: bool,
    /// Reference depth at this pixel.
    d: f64,
    /// Scale-free transformed direction `R r + t/d`.
    dir: Vector3<f64>,
    /// Bilinear image samples per channel (value + coordinate derivatives).
    img: [BilinearSample; 3],
    /// Top-left corner of the sample footprint in the source grid.
    x0: usize,
    y0: usize,
    /// Bilinear tap weights for (x0,y0), (x0+1,y0), (x0,y0+1), (x0+1,y0+1).
    wts: [f64; 4],
    /// Interpolated source depth divided by `d` (value + coordinate derivatives).
    s: f64,
    ds_dx: f64,
    ds_dy: f64,
    /// Depth ratio `dir.z / s`; the discrepancy is `|rho - 1| / (rho + 1)`.
    rho: f64,
    d_diff: f64,
}

impl Default for PixelRecord {
    fn default() -> Self {
        PixelRecord {
            valid: false,
            d: 0.0,
            dir: Vector3::zeros(),
            img: [BilinearSample::default(); 3],
            x0: 0,
            y0: 0,
            wts: [0.0; 4],
            s: 0.0,
            ds_dx: 0.0,
            ds_dy: 0.0,
            rho: 0.0,
            d_diff: 0.0,
        }
    }
}

/// Evaluates the full objective and, unless disabled in `options`, its
/// gradients with respect to both depth maps and the relative pose.
pub fn total_loss(
    inputs: &LossInputs,
    weights: &LossWeights,
    options: &LossOptions,
) -> Result<LossBundle> {
    evaluate(inputs, weights, options, None)
}

/// Same as [`total_loss`] but with the occlusion masks pinned to an external
/// state instead of being recomputed from the current warp.
pub fn total_loss_with_masks(
    inputs: &LossInputs,
    weights: &LossWeights,
    options: &LossOptions,
    masks: &MaskOverride,
) -> Result<LossBundle> {
    evaluate(inputs, weights, options, Some(masks))
}

fn evaluate(
    inputs: &LossInputs,
    weights: &LossWeights,
    options: &LossOptions,
    masks: Option<&MaskOverride>,
) -> Result<LossBundle> {
    let (w, h, c) = validate(inputs, masks)?;
    let n_px = w * h;
    let k = inputs.intrinsics;
    let rot = inputs.pose_ab.rotation();
    let trans = inputs.pose_ab.translation();

    // ---- Forward: warp every reference pixel into the source view. ----
    let mut recs = vec![PixelRecord::default(); n_px];
    let mut valid = PixelMask::filled(w, h, false);
    let mut warped_data = vec![0.0; n_px * c];
    for v in 0..h {
        for u in 0..w {
            let i = v * w + u;
            let Some(d) = inputs.depth_a.get(u, v) else { continue };
            let proj = project_pixel(k, rot, trans, u as f64, v as f64, d);
            if !proj.in_front {
                continue;
            }
            let Some(fp) = BilinearFootprint::locate(proj.u, proj.v, w, h) else { continue };
            let (x0, y0) = (fp.x0, fp.y0);
            if !(inputs.depth_b.is_valid(x0, y0)
                && inputs.depth_b.is_valid(x0 + 1, y0)
                && inputs.depth_b.is_valid(x0, y0 + 1)
                && inputs.depth_b.is_valid(x0 + 1, y0 + 1))
            {
                continue;
            }
            let mut img = [BilinearSample::default(); 3];
            for ch in 0..c {
                let mut s = fp.interpolate(
                    inputs.image_b.get(x0, y0, ch),
                    inputs.image_b.get(x0 + 1, y0, ch),
                    inputs.image_b.get(x0, y0 + 1, ch),
                    inputs.image_b.get(x0 + 1, y0 + 1, ch),
                );
                // Convex combination of values in [0, 1]; clamp away rounding
                // overshoot so the warped grid passes range validation.
                s.value = s.value.clamp(0.0, 1.0);
                img[ch] = s;
                warped_data[i * c + ch] = s.value;
            }
            // Source depth divided by the reference depth: interpolating the
            // ratio keeps the comparison exactly invariant to a joint scaling
            // of all depths and the translation.
            let s = fp.interpolate(
                inputs.depth_b.value_unchecked(x0, y0) / d,
                inputs.depth_b.value_unchecked(x0 + 1, y0) / d,
                inputs.depth_b.value_unchecked(x0, y0 + 1) / d,
                inputs.depth_b.value_unchecked(x0 + 1, y0 + 1) / d,
            );
            let rho = proj.dir[2] / s.value;
            let d_diff = (rho - 1.0).abs() / (rho + 1.0);
            recs[i] = PixelRecord {
                valid: true,
                d,
                dir: proj.dir,
                img,
                x0,
                y0,
                wts: fp.weights(),
                s: s.value,
                ds_dx: s.ddx,
                ds_dy: s.ddy,
                rho,
                d_diff,
            };
            valid.set(u, v, true);
        }
    }
    if valid.count() == 0 {
        return Err(Error::NoOverlap(
            "no reference pixel lands inside the source view".into(),
        ));
    }
    let warped = ImageGrid::new(w, h, c, warped_data)?;

    // ---- Masks and supports. ----
    let keep = match masks {
        Some(m) => m.keep.intersect(&valid),
        None if options.use_auto_mask => auto_mask(inputs.image_a, inputs.image_b, &warped, &valid)?,
        None => valid.clone(),
    };
    let struct_support = structural_support(&valid);
    if struct_support.count() == 0 {
        return Err(Error::NoOverlap(
            "no pixel has a full structural window inside the valid set".into(),
        ));
    }
    let photo_support = struct_support.intersect(&keep);
    let n_photo = photo_support.count();
    if n_photo == 0 {
        return Err(Error::FullyMasked(
            "every structurally supported pixel is masked out".into(),
        ));
    }
    // The geometry support contains the photometric one, so it is non-empty.
    let geo_support = valid.intersect(&keep);
    let n_geo = geo_support.count();

    let mut d_diff_map = vec![0.0; n_px];
    let mut self_mask = vec![0.0; n_px];
    for (i, rec) in recs.iter().enumerate() {
        if rec.valid {
            d_diff_map[i] = rec.d_diff;
            self_mask[i] = 1.0 - rec.d_diff;
        }
    }
    let soft = |i: usize| -> f64 {
        if !options.use_self_mask {
            return 1.0;
        }
        match masks {
            Some(m) => m.soft_weight[i],
            None => self_mask[i],
        }
    };

    // ---- Forward: per-pixel photometric cost on the structural support. ----
    let mut stats = vec![WindowStats::default(); n_px * c];
    let mut sim = vec![0.0; n_px * c];
    let mut photometric_map = vec![0.0; n_px];
    let mut lp_acc = KahanSum::new();
    for v in 1..h - 1 {
        for u in 1..w - 1 {
            let i = v * w + u;
            if !struct_support.at(i) {
                continue;
            }
            let mut l1 = 0.0;
            let mut sim_mean = 0.0;
            for ch in 0..c {
                l1 += (warped.get(u, v, ch) - inputs.image_a.get(u, v, ch)).abs();
                let st = window_stats(inputs.image_a, &warped, ch, u, v);
                let value = match options.photometric {
                    PhotometricKind::Ssim => ssim_from_stats(&st),
                    PhotometricKind::Ncc => ncc_from_stats(&st),
                };
                stats[i * c + ch] = st;
                sim[i * c + ch] = value;
                sim_mean += value;
            }
            l1 /= c as f64;
            sim_mean /= c as f64;
            let cost = weights.lambda * l1 + (1.0 - weights.lambda) * (1.0 - sim_mean) / 2.0;
            photometric_map[i] = cost;
            if photo_support.at(i) {
                lp_acc.add(soft(i) * cost);
            }
        }
    }
    let lp = lp_acc.value() / n_photo as f64;

    // ---- Forward: geometry term. ----
    let mut lg_acc = KahanSum::new();
    for (i, rec) in recs.iter().enumerate() {
        if geo_support.at(i) {
            lg_acc.add(rec.d_diff);
        }
    }
    let lg = lg_acc.value() / n_geo as f64;

    // ---- Smoothness term (accumulates its gradient in the same pass). ----
    let mut grad_depth_a = vec![0.0; n_px];
    let mut grad_depth_b = vec![0.0; n_px];
    let mut grad_twist = Twist::zeros();
    let ls = if options.compute_gradients {
        smoothness_forward(
            inputs.depth_a,
            inputs.image_a,
            Some((&mut grad_depth_a, weights.beta)),
        )?
    } else {
        smoothness_forward(inputs.depth_a, inputs.image_a, None)?
    };

    let total = weights.alpha * lp + weights.beta * ls + weights.gamma * lg;
    if !total.is_finite() {
        return Err(Error::Domain(format!("objective is not finite: {total}")));
    }

    // ---- Backward. ----
    if options.compute_gradients {
        // d(total)/d(warped pixel value), accumulated per channel.
        let mut g_warp = vec![0.0; n_px * c];
        // d(total)/d(interpolated depth ratio s).
        let mut g_s = vec![0.0; n_px];
        // Direct d(total)/d(dir.z) contributions through rho.
        let mut g_dirz = vec![0.0; n_px];

        // Photometric: L1 at the pixel plus the window term spread over the
        // nine contributing warped pixels.
        for v in 1..h - 1 {
            for u in 1..w - 1 {
                let i = v * w + u;
                if !photo_support.at(i) {
                    continue;
                }
                let cp = weights.alpha * soft(i) / n_photo as f64;
                let l1_coeff = cp * weights.lambda / c as f64;
                let win_coeff = -cp * (1.0 - weights.lambda) / (2.0 * c as f64);
                for ch in 0..c {
                    let diff = warped.get(u, v, ch) - inputs.image_a.get(u, v, ch);
                    if diff != 0.0 {
                        g_warp[i * c + ch] += l1_coeff * diff.signum();
                    }
                    let st = &stats[i * c + ch];
                    let value = sim[i * c + ch];
                    for dv in 0..3 {
                        for du in 0..3 {
                            let (qu, qv) = (u + du - 1, v + dv - 1);
                            let x_q = inputs.image_a.get(qu, qv, ch);
                            let y_q = warped.get(qu, qv, ch);
                            let dsim = match options.photometric {
                                PhotometricKind::Ssim => ssim_derivative_wrt_y(st, value, x_q, y_q),
                                PhotometricKind::Ncc => ncc_derivative_wrt_y(st, x_q, y_q),
                            };
                            g_warp[(qv * w + qu) * c + ch] += win_coeff * dsim;
                        }
                    }
                }
            }
        }

        // Geometry: d_diff depends on rho = dir.z / s.
        for (i, rec) in recs.iter().enumerate() {
            if !geo_support.at(i) {
                continue;
            }
            let sign = if rec.rho > 1.0 {
                1.0
            } else if rec.rho < 1.0 {
                -1.0
            } else {
                0.0
            };
            let denom = (rec.rho + 1.0) * (rec.rho + 1.0);
            let g_rho = weights.gamma / n_geo as f64 * 2.0 * sign / denom;
            g_dirz[i] += g_rho / rec.s;
            g_s[i] -= g_rho * rec.dir[2] / (rec.s * rec.s);
        }

        // Scatter through the warp geometry: sample coordinates, source depth
        // taps, the transformed direction, and finally depth and pose.
        for v in 0..h {
            for u in 0..w {
                let i = v * w + u;
                let rec = &recs[i];
                if !rec.valid {
                    continue;
                }
                let mut gx = 0.0;
                let mut gy = 0.0;
                for ch in 0..c {
                    let g = g_warp[i * c + ch];
                    if g != 0.0 {
                        gx += g * rec.img[ch].ddx;
                        gy += g * rec.img[ch].ddy;
                    }
                }
                let gs = g_s[i];
                if gs != 0.0 {
                    gx += gs * rec.ds_dx;
                    gy += gs * rec.ds_dy;
                    // s = sum_i w_i * depth_b[i] / d.
                    grad_depth_b[rec.y0 * w + rec.x0] += gs * rec.wts[0] / rec.d;
                    grad_depth_b[rec.y0 * w + rec.x0 + 1] += gs * rec.wts[1] / rec.d;
                    grad_depth_b[(rec.y0 + 1) * w + rec.x0] += gs * rec.wts[2] / rec.d;
                    grad_depth_b[(rec.y0 + 1) * w + rec.x0 + 1] += gs * rec.wts[3] / rec.d;
                    grad_depth_a[i] -= gs * rec.s / rec.d;
                }
                if gx == 0.0 && gy == 0.0 && g_dirz[i] == 0.0 {
                    continue;
                }
                // u' = fx dir.x / dir.z + cx, v' = fy dir.y / dir.z + cy.
                let az = rec.dir[2];
                let mut g_dir = Vector3::new(
                    gx * k.fx / az,
                    gy * k.fy / az,
                    -(gx * k.fx * rec.dir[0] + gy * k.fy * rec.dir[1]) / (az * az),
                );
                g_dir[2] += g_dirz[i];
                // dir = R r + t/d.
                grad_depth_a[i] -= g_dir.dot(trans) / (rec.d * rec.d);
                let g_v = g_dir / rec.d;
                let g_w = rec.dir.cross(&g_dir);
                grad_twist[0] += g_v[0];
                grad_twist[1] += g_v[1];
                grad_twist[2] += g_v[2];
                grad_twist[3] += g_w[0];
                grad_twist[4] += g_w[1];
                grad_twist[5] += g_w[2];
            }
        }
    }

    Ok(LossBundle {
        total,
        photometric: lp,
        smoothness: ls,
        geometry: lg,
        warped,
        valid,
        auto_mask: keep,
        photo_support,
        geo_support,
        photometric_map,
        d_diff_map,
        self_mask,
        grad_depth_a,
        grad_depth_b,
        grad_twist,
        width: w,
        height: h,
    })
}

fn validate(inputs: &LossInputs, masks: Option<&MaskOverride>) -> Result<(usize, usize, usize)> {
    let (w, h, c) = (
        inputs.image_a.width(),
        inputs.image_a.height(),
        inputs.image_a.channels(),
    );
    if !inputs.image_a.same_shape(inputs.image_b) {
        return Err(Error::Data("the two images differ in shape".into()));
    }
    if inputs.depth_a.width() != w
        || inputs.depth_a.height() != h
        || inputs.depth_b.width() != w
        || inputs.depth_b.height() != h
    {
        return Err(Error::Data(format!(
            "depth maps must match the {w}x{h} images"
        )));
    }
    if inputs.intrinsics.width != w || inputs.intrinsics.height != h {
        return Err(Error::Data(format!(
            "intrinsics are for {}x{}, images are {w}x{h}",
            inputs.intrinsics.width, inputs.intrinsics.height
        )));
    }
    if w < 3 || h < 3 {
        return Err(Error::Data(format!(
            "images must be at least 3x3 for windowed comparisons, got {w}x{h}"
        )));
    }
    if let Some(m) = masks {
        if m.keep.width() != w || m.keep.height() != h || m.soft_weight.len() != w * h {
            return Err(Error::Data("mask override does not match the image shape".into()));
        }
    }
    Ok((w, h, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::compare_gradients;
    use crate::losses::geometry_consistency::{depth_inconsistency, geometry_consistency_loss};
    use crate::losses::photometric::photometric_loss;
    use crate::losses::smoothness::smoothness_loss;

    fn centered_intrinsics(focal: f64, w: usize, h: usize) -> Intrinsics {
        Intrinsics::centered(focal, w, h).unwrap()
    }

    fn texture(w: usize, h: usize, fu: f64, fv: f64, phase: f64) -> ImageGrid {
        ImageGrid::from_fn(w, h, 1, |u, v, _| {
            0.5 + 0.35 * (fu * u as f64 + fv * v as f64 + phase).sin()
        })
        .unwrap()
    }

    /// Fronto-parallel plane, power-of-two intrinsics and an integer pixel
    /// shift: the warp reproduces the reference image bit-for-bit and the
    /// depth maps agree exactly, so only smoothness can cost anything.
    #[test]
    fn consistent_setup_costs_only_smoothness() {
        let (w, h) = (16, 12);
        let k = Intrinsics::new(32.0, 32.0, 7.5, 5.5, w, h).unwrap();
        let depth = 4.0;
        // shift = fx * tx / depth = 32 * 0.5 / 4 = 4 pixels exactly.
        let t = Vector3::new(0.5, 0.0, 0.0);
        let pose = PoseSE3::new(nalgebra::Matrix3::identity(), t).unwrap();
        let tex = |shift: f64| {
            ImageGrid::from_fn(w, h, 1, |u, v, _| {
                0.5 + 0.3 * (0.37 * (u as f64 + shift) + 0.23 * v as f64).sin()
            })
            .unwrap()
        };
        let image_a = tex(0.0);
        let image_b = tex(-4.0); // image_b(u) = image_a(u - 4); sampled at u + 4 it matches.
        let depth_a = DepthMap::constant(w, h, depth).unwrap();
        let depth_b = DepthMap::constant(w, h, depth).unwrap();

        let inputs = LossInputs {
            image_a: &image_a,
            image_b: &image_b,
            depth_a: &depth_a,
            depth_b: &depth_b,
            pose_ab: &pose,
            intrinsics: &k,
        };
        let weights = LossWeights::default();
        let bundle = total_loss(&inputs, &weights, &LossOptions::default()).unwrap();

        assert_eq!(bundle.photometric, 0.0, "warp should be exact");
        assert_eq!(bundle.geometry, 0.0, "depths are consistent");
        assert_eq!(bundle.total, weights.beta * bundle.smoothness);
        assert_eq!(bundle.smoothness, 0.0, "constant depth is flat");
        // 12 of 16 columns land inside; their interior windows survive.
        assert!(bundle.photo_support.count() > 50, "support {}", bundle.photo_support.count());
    }

    /// With masks off, the fused evaluation must agree with the three
    /// standalone losses composed by hand.
    #[test]
    fn matches_standalone_losses_and_reports_exact_blend() {
        let (w, h) = (14, 11);
        let k = centered_intrinsics(20.0, w, h);
        let image_a = texture(w, h, 0.8, 0.45, 0.1);
        let image_b = texture(w, h, 0.55, 0.75, 1.9);
        let depth_a = DepthMap::from_values(
            w,
            h,
            (0..w * h)
                .map(|i| 3.5 + 0.4 * ((i % w) as f64 * 0.5).sin() + 0.2 * ((i / w) as f64 * 0.8).cos())
                .collect(),
        )
        .unwrap();
        let depth_b = DepthMap::from_values(
            w,
            h,
            (0..w * h).map(|i| 4.1 + 0.3 * (i as f64 * 0.17).sin()).collect(),
        )
        .unwrap();
        let pose = PoseSE3::exp(&Twist::from_column_slice(&[0.12, -0.05, 0.04, 0.01, -0.015, 0.008]));

        let inputs = LossInputs {
            image_a: &image_a,
            image_b: &image_b,
            depth_a: &depth_a,
            depth_b: &depth_b,
            pose_ab: &pose,
            intrinsics: &k,
        };
        let weights = LossWeights::default();
        let options = LossOptions::default().unmasked();
        let bundle = total_loss(&inputs, &weights, &options).unwrap();

        // Smoothness is literally the same function.
        assert_eq!(bundle.smoothness, smoothness_loss(&depth_a, &image_a).unwrap());

        // Geometry agrees with the standalone pipeline.
        let diff = depth_inconsistency(&depth_a, &depth_b, &pose, &k).unwrap();
        let lg = geometry_consistency_loss(&diff).unwrap();
        assert!((bundle.geometry - lg).abs() < 1e-14, "{} vs {}", bundle.geometry, lg);
        assert_eq!(bundle.valid.count(), diff.valid.count());
        for i in 0..w * h {
            assert_eq!(bundle.d_diff_map[i], diff.map[i]);
        }

        // Photometric agrees with the standalone loss on the same warp.
        let (warped, valid) = crate::geometry::warp_image(&image_b, &depth_a, &pose, &k).unwrap();
        for i in 0..w * h {
            assert_eq!(bundle.valid.at(i), valid.at(i));
            assert_eq!(bundle.warped.data()[i], warped.data()[i]);
        }
        let standalone = photometric_loss(&image_a, &warped, &valid, &weights, PhotometricKind::Ssim).unwrap();
        assert!(
            (bundle.photometric - standalone.value).abs() < 1e-13,
            "{} vs {}",
            bundle.photometric,
            standalone.value
        );

        // The reported total is the exact weighted blend of the reported terms.
        assert_eq!(
            bundle.total,
            weights.alpha * bundle.photometric
                + weights.beta * bundle.smoothness
                + weights.gamma * bundle.geometry
        );

        // Without the brightness comparison the geometry support is the valid set.
        assert_eq!(bundle.geo_support.count(), bundle.valid.count());
    }

    #[test]
    fn static_pair_is_fully_masked() {
        let (w, h) = (12, 10);
        let k = Intrinsics::new(32.0, 32.0, 5.5, 4.5, w, h).unwrap();
        let image = texture(w, h, 0.9, 0.6, 0.3);
        let depth = DepthMap::constant(w, h, 5.0).unwrap();
        let pose = PoseSE3::identity();
        let inputs = LossInputs {
            image_a: &image,
            image_b: &image,
            depth_a: &depth,
            depth_b: &depth,
            pose_ab: &pose,
            intrinsics: &k,
        };
        let err = total_loss(&inputs, &LossWeights::default(), &LossOptions::default()).unwrap_err();
        assert!(matches!(err, Error::FullyMasked(_)), "got {err:?}");
    }

    #[test]
    fn no_overlap_when_everything_is_behind_the_source_camera() {
        let (w, h) = (8, 8);
        let k = centered_intrinsics(16.0, w, h);
        let image = texture(w, h, 0.7, 0.7, 0.0);
        let depth = DepthMap::constant(w, h, 3.0).unwrap();
        let pose = PoseSE3::new(nalgebra::Matrix3::identity(), Vector3::new(0.0, 0.0, -20.0)).unwrap();
        let inputs = LossInputs {
            image_a: &image,
            image_b: &image,
            depth_a: &depth,
            depth_b: &depth,
            pose_ab: &pose,
            intrinsics: &k,
        };
        let err = total_loss(&inputs, &LossWeights::default(), &LossOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoOverlap(_)), "got {err:?}");
    }

    #[test]
    fn correlation_variant_changes_the_photometric_term_only() {
        let (w, h) = (12, 12);
        let k = centered_intrinsics(18.0, w, h);
        let image_a = texture(w, h, 0.8, 0.5, 0.0);
        let image_b = texture(w, h, 0.6, 0.7, 2.0);
        let depth_a = DepthMap::constant(w, h, 4.0).unwrap();
        let depth_b = DepthMap::constant(w, h, 4.2).unwrap();
        let pose = PoseSE3::new(nalgebra::Matrix3::identity(), Vector3::new(0.3, 0.1, 0.0)).unwrap();
        let inputs = LossInputs {
            image_a: &image_a,
            image_b: &image_b,
            depth_a: &depth_a,
            depth_b: &depth_b,
            pose_ab: &pose,
            intrinsics: &k,
        };
        let weights = LossWeights::default();
        let base = LossOptions::default().unmasked();
        let ssim = total_loss(&inputs, &weights, &base).unwrap();
        let ncc = total_loss(
            &inputs,
            &weights,
            &LossOptions { photometric: PhotometricKind::Ncc, ..base },
        )
        .unwrap();
        assert_ne!(ssim.photometric, ncc.photometric);
        assert_eq!(ssim.geometry, ncc.geometry);
        assert_eq!(ssim.smoothness, ncc.smoothness);
    }

    /// Analytic gradients against central finite differences on a small but
    /// fully general configuration (both masks active, frozen during the
    /// differencing so the comparison matches the stop-gradient convention).
    #[test]
    fn gradients_match_finite_differences() {
        let (w, h) = (10, 10);
        let k = centered_intrinsics(24.0, w, h);
        let image_a = texture(w, h, 0.9, 0.55, 0.2);
        let image_b = texture(w, h, 0.65, 0.8, 2.4);
        let depth_a_vals: Vec<f64> = (0..w * h)
            .map(|i| {
                let (u, v) = ((i % w) as f64, (i / w) as f64);
                4.0 * (1.0 + 0.02 * (1.3 * u + 0.7 * v).sin())
            })
            .collect();
        let depth_b_vals: Vec<f64> = (0..w * h)
            .map(|i| {
                let (u, v) = ((i % w) as f64, (i / w) as f64);
                4.8 * (1.0 + 0.02 * (0.9 * u + 1.1 * v).cos())
            })
            .collect();
        let depth_a = DepthMap::from_values(w, h, depth_a_vals.clone()).unwrap();
        let depth_b = DepthMap::from_values(w, h, depth_b_vals.clone()).unwrap();
        // Lateral motion placing every projection about half a pixel off the
        // grid lines: no bilinear kinks inside the differencing interval.
        let pose = PoseSE3::new(nalgebra::Matrix3::identity(), Vector3::new(0.42, 0.09, 0.0)).unwrap();
        let weights = LossWeights::default();
        let options = LossOptions::default();

        let inputs = LossInputs {
            image_a: &image_a,
            image_b: &image_b,
            depth_a: &depth_a,
            depth_b: &depth_b,
            pose_ab: &pose,
            intrinsics: &k,
        };
        let base = total_loss(&inputs, &weights, &options).unwrap();

        // Verify the no-kink margins this configuration was built for.
        for v in 0..h {
            for u in 0..w {
                let Some(d) = depth_a.get(u, v) else { continue };
                let proj = project_pixel(&k, pose.rotation(), pose.translation(), u as f64, v as f64, d);
                let (fu, fv) = (proj.u.fract(), proj.v.fract());
                assert!((0.05..=0.95).contains(&fu) && (0.05..=0.95).contains(&fv), "({u},{v}) -> ({fu},{fv})");
                let i = v * w + u;
                if base.valid.at(i) {
                    assert!((base.d_diff_map[i]).abs() > 0.01, "rho too close to 1 at ({u},{v})");
                }
                // L1 sign flips inside the differencing interval would break
                // the comparison; the textures must keep a healthy margin.
                if base.photo_support.at(i) {
                    let margin = (base.warped.get(u, v, 0) - image_a.get(u, v, 0)).abs();
                    assert!(margin > 2e-3, "L1 margin {margin} too small at ({u},{v})");
                }
            }
        }

        let keep = base.auto_mask.clone();
        let soft = base.self_mask.clone();
        let frozen = MaskOverride { keep: &keep, soft_weight: &soft };
        let eval = |da: &[f64], db: &[f64], pose: &PoseSE3| -> f64 {
            let depth_a = DepthMap::from_values(w, h, da.to_vec()).unwrap();
            let depth_b = DepthMap::from_values(w, h, db.to_vec()).unwrap();
            let inputs = LossInputs {
                image_a: &image_a,
                image_b: &image_b,
                depth_a: &depth_a,
                depth_b: &depth_b,
                pose_ab: pose,
                intrinsics: &k,
            };
            total_loss_with_masks(&inputs, &weights, &options.forward_only(), &frozen)
                .unwrap()
                .total
        };

        let eps = 1e-4;
        // All depth_a pixels.
        let mut fd_a = vec![0.0; w * h];
        for i in 0..w * h {
            let mut hi = depth_a_vals.clone();
            let mut lo = depth_a_vals.clone();
            hi[i] += eps;
            lo[i] -= eps;
            fd_a[i] = (eval(&hi, &depth_b_vals, &pose) - eval(&lo, &depth_b_vals, &pose)) / (2.0 * eps);
        }
        let cmp = compare_gradients(&base.grad_depth_a, &fd_a, 1e-6);
        assert!(cmp.within(1e-4), "depth_a: rel {} at {} ({} vs {})", cmp.max_rel, cmp.worst_index, cmp.worst_analytic, cmp.worst_numeric);

        // All depth_b pixels.
        let mut fd_b = vec![0.0; w * h];
        for i in 0..w * h {
            let mut hi = depth_b_vals.clone();
            let mut lo = depth_b_vals.clone();
            hi[i] += eps;
            lo[i] -= eps;
            fd_b[i] = (eval(&depth_a_vals, &hi, &pose) - eval(&depth_a_vals, &lo, &pose)) / (2.0 * eps);
        }
        let cmp = compare_gradients(&base.grad_depth_b, &fd_b, 1e-6);
        assert!(cmp.within(1e-4), "depth_b: rel {} at {} ({} vs {})", cmp.max_rel, cmp.worst_index, cmp.worst_analytic, cmp.worst_numeric);

        // All six twist components, differenced as pose <- exp(xi) * pose.
        let mut fd_t = [0.0; 6];
        for j in 0..6 {
            let mut xi = Twist::zeros();
            xi[j] = eps;
            let hi = eval(&depth_a_vals, &depth_b_vals, &PoseSE3::exp(&xi).compose(&pose));
            xi[j] = -eps;
            let lo = eval(&depth_a_vals, &depth_b_vals, &PoseSE3::exp(&xi).compose(&pose));
            fd_t[j] = (hi - lo) / (2.0 * eps);
        }
        let analytic: [f64; 6] = core::array::from_fn(|j| base.grad_twist[j]);
        let cmp = compare_gradients(&analytic, &fd_t, 1e-6);
        assert!(cmp.within(1e-4), "twist: rel {} at {} ({} vs {})", cmp.max_rel, cmp.worst_index, cmp.worst_analytic, cmp.worst_numeric);
    }

    /// Gradients must also be right for the correlation-based photometric
    /// variant (different window derivative).
    #[test]
    fn correlation_gradients_match_finite_differences_on_depth_a() {
        let (w, h) = (8, 8);
        let k = centered_intrinsics(20.0, w, h);
        let image_a = texture(w, h, 0.85, 0.6, 0.7);
        let image_b = texture(w, h, 0.6, 0.9, 2.1);
        let depth_vals: Vec<f64> = (0..w * h)
            .map(|i| 3.0 * (1.0 + 0.02 * (0.8 * (i % w) as f64 + 1.2 * (i / w) as f64).sin()))
            .collect();
        let depth_a = DepthMap::from_values(w, h, depth_vals.clone()).unwrap();
        let depth_b = DepthMap::constant(w, h, 3.4).unwrap();
        let pose = PoseSE3::new(nalgebra::Matrix3::identity(), Vector3::new(0.23, 0.08, 0.0)).unwrap();
        let weights = LossWeights::default();
        let options = LossOptions { photometric: PhotometricKind::Ncc, ..LossOptions::default() };
        let inputs = LossInputs {
            image_a: &image_a,
            image_b: &image_b,
            depth_a: &depth_a,
            depth_b: &depth_b,
            pose_ab: &pose,
            intrinsics: &k,
        };
        let base = total_loss(&inputs, &weights, &options).unwrap();
        let keep = base.auto_mask.clone();
        let soft = base.self_mask.clone();
        for v in 0..h {
            for u in 0..w {
                if base.photo_support.at(v * w + u) {
                    let margin = (base.warped.get(u, v, 0) - image_a.get(u, v, 0)).abs();
                    assert!(margin > 1e-4, "L1 margin {margin} too small at ({u},{v})");
                }
            }
        }

        let eps = 1e-4;
        let mut fd = vec![0.0; w * h];
        for i in 0..w * h {
            let mut hi = depth_vals.clone();
            let mut lo = depth_vals.clone();
            hi[i] += eps;
            lo[i] -= eps;
            let f = |vals: &[f64]| {
                let depth_a = DepthMap::from_values(w, h, vals.to_vec()).unwrap();
                let inputs = LossInputs { depth_a: &depth_a, ..inputs };
                total_loss_with_masks(
                    &inputs,
                    &weights,
                    &options.forward_only(),
                    &MaskOverride { keep: &keep, soft_weight: &soft },
                )
                .unwrap()
                .total
            };
            fd[i] = (f(&hi) - f(&lo)) / (2.0 * eps);
        }
        let cmp = compare_gradients(&base.grad_depth_a, &fd, 1e-6);
        assert!(cmp.within(1e-4), "rel {} at {} ({} vs {})", cmp.max_rel, cmp.worst_index, cmp.worst_analytic, cmp.worst_numeric);
    }
}
