//! Frame-to-frame camera tracking against the previous frame's image and
//! depth, plus trajectory bookkeeping and reprojection residual definitions.
//!
//! The tracker is direct and dense: it refines the 6-twist of the relative
//! pose by Gauss-Newton on Huber-weighted photometric residuals, optionally
//! augmented with depth-ratio residuals against the current frame's depth
//! map. Depth stays frozen; only the pose moves. Chaining the per-frame
//! relative poses yields a trajectory anchored at the identity.

use nalgebra::{Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::geometry::{backproject, DepthMap, ImageGrid, Intrinsics, PoseSE3, Twist, Z_EPS};

/// Ordered list of (frame index, world-from-camera pose).
///
/// Indices increase strictly and the first pose is the identity: the world
/// frame is anchored at the first tracked frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    entries: Vec<(usize, PoseSE3)>,
}

/// Deviation tolerated when checking that the anchor pose is the identity.
const ANCHOR_TOL: f64 = 1e-9;

impl Trajectory {
    /// Starts a trajectory at `(first_index, identity)`.
    pub fn anchored(first_index: usize) -> Self {
        Trajectory { entries: vec![(first_index, PoseSE3::identity())] }
    }

    /// Validates and wraps an explicit list of entries.
    pub fn new(entries: Vec<(usize, PoseSE3)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Data("a trajectory needs at least one pose".into()));
        }
        let (_, first) = &entries[0];
        if first.rotation_angle() > ANCHOR_TOL || first.translation().norm() > ANCHOR_TOL {
            return Err(Error::Data("trajectory must start at the identity pose".into()));
        }
        for pair in entries.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Data(format!(
                    "frame indices must increase strictly, got {} after {}",
                    pair[1].0, pair[0].0
                )));
            }
        }
        Ok(Trajectory { entries })
    }

    /// Appends a pose for a later frame.
    pub fn push(&mut self, index: usize, pose: PoseSE3) -> Result<()> {
        if let Some((last, _)) = self.entries.last() {
            if index <= *last {
                return Err(Error::Data(format!(
                    "frame indices must increase strictly, got {index} after {last}"
                )));
            }
        }
        self.entries.push((index, pose));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, PoseSE3)] {
        &self.entries
    }

    pub fn pose(&self, position: usize) -> &PoseSE3 {
        &self.entries[position].1
    }

    /// Camera centers in world coordinates, in trajectory order.
    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.entries.iter().map(|(_, p)| *p.translation()).collect()
    }

    /// Relative pose mapping camera-`a` coordinates into camera-`b`
    /// coordinates, by trajectory position.
    pub fn relative(&self, a: usize, b: usize) -> PoseSE3 {
        self.entries[b].1.inverse().compose(&self.entries[a].1)
    }

    /// Adjacent-pair relative poses `frame i -> frame i+1`, in order.
    pub fn to_relatives(&self) -> Vec<PoseSE3> {
        (0..self.entries.len().saturating_sub(1)).map(|i| self.relative(i, i + 1)).collect()
    }

    /// Rebuilds world poses from adjacent relatives with indices `0..=n`.
    ///
    /// Inverse of [`Trajectory::to_relatives`] up to floating-point rounding
    /// in the compose/inverse chain.
    pub fn from_relatives(relatives: &[PoseSE3]) -> Self {
        let mut entries = Vec::with_capacity(relatives.len() + 1);
        entries.push((0, PoseSE3::identity()));
        for (i, rel) in relatives.iter().enumerate() {
            let world = entries[i].1.compose(&rel.inverse());
            entries.push((i + 1, world));
        }
        Trajectory { entries }
    }
}

/// A pixel observation carrying its disparity (inverse depth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
    pub disparity: f64,
}

/// A matched pair: the measured point in the current frame and the point
/// projected into it from the previous frame or map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub measured: ImagePoint,
    pub projected: ImagePoint,
}

impl Correspondence {
    /// Validates that both disparities are positive and finite.
    pub fn new(measured: ImagePoint, projected: ImagePoint) -> Result<Self> {
        for (label, p) in [("measured", &measured), ("projected", &projected)] {
            if !(p.u.is_finite() && p.v.is_finite()) {
                return Err(Error::Data(format!("{label} point has non-finite coordinates")));
            }
            if !(p.disparity.is_finite() && p.disparity > 0.0) {
                return Err(Error::Data(format!(
                    "{label} point needs a positive disparity, got {}",
                    p.disparity
                )));
            }
        }
        Ok(Correspondence { measured, projected })
    }
}

/// Which residual components enter a reprojection error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReprojectionMode {
    /// Pixel offset only.
    Pixel,
    /// Pixel offset plus the disparity offset as a third component.
    PixelDisparity,
}

/// Euclidean reprojection error of a correspondence.
///
/// `Pixel` ignores depth; `PixelDisparity` appends the disparity residual,
/// so it is always at least as large, with equality exactly when the two
/// disparities agree.
pub fn reprojection_error(c: &Correspondence, mode: ReprojectionMode) -> f64 {
    let du = c.measured.u - c.projected.u;
    let dv = c.measured.v - c.projected.v;
    let planar = du * du + dv * dv;
    match mode {
        ReprojectionMode::Pixel => planar.sqrt(),
        ReprojectionMode::PixelDisparity => {
            let dd = c.measured.disparity - c.projected.disparity;
            (planar + dd * dd).sqrt()
        }
    }
}

/// How the pose of the next frame is seeded before refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Repeat the last observed relative motion (constant velocity).
    MotionModel,
    /// Use an externally supplied relative pose.
    External,
}

/// Initial guess for the relative pose `previous frame -> next frame`.
///
/// The motion model replays the most recent relative motion in the history
/// and falls back to the identity when fewer than two poses exist. External
/// mode returns the supplied pose and fails without one.
pub fn init_pose(mode: InitMode, history: &Trajectory, external: Option<&PoseSE3>) -> Result<PoseSE3> {
    match mode {
        InitMode::MotionModel => {
            let n = history.len();
            if n < 2 {
                return Ok(PoseSE3::identity());
            }
            Ok(history.relative(n - 2, n - 1))
        }
        InitMode::External => external.cloned().ok_or_else(|| {
            Error::Config("external pose initialization selected but no pose was supplied".into())
        }),
    }
}

/// Tracker settings.
#[derive(Debug, Clone)]
pub struct TrackOptions {
    /// Weight of the depth-ratio residuals (0 disables them even when the
    /// current frame has depth).
    pub gamma: f64,
    /// Huber threshold on photometric residuals.
    pub huber_delta: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the applied twist-update norm.
    pub convergence_tol: f64,
    /// Tracking is lost when fewer than this fraction of pixels survive the
    /// warp.
    pub min_overlap: f64,
    /// Tracking is lost when the mean photometric residual ends above this.
    pub max_mean_photometric: f64,
    /// Required fraction of valid pixels in the previous frame's depth map.
    pub min_prev_valid: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            gamma: 0.5,
            huber_delta: 0.1,
            max_iterations: 50,
            convergence_tol: 1e-8,
            min_overlap: 0.1,
            max_mean_photometric: 0.5,
            min_prev_valid: 0.2,
        }
    }
}

impl TrackOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if !(self.huber_delta.is_finite() && self.huber_delta > 0.0) {
            return Err(Error::Config(format!("huber delta must be positive, got {}", self.huber_delta)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max iterations must be at least 1".into()));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(Error::Config(format!(
                "convergence tolerance must be positive, got {}",
                self.convergence_tol
            )));
        }
        for (label, f) in [
            ("minimum overlap", self.min_overlap),
            ("maximum mean photometric residual", self.max_mean_photometric),
            ("minimum previous-depth validity", self.min_prev_valid),
        ] {
            if !(f.is_finite() && 0.0 < f && f <= 1.0) {
                return Err(Error::Config(format!("{label} must lie in (0, 1], got {f}")));
            }
        }
        Ok(())
    }
}

/// Refined pose and diagnostics of one tracking step.
#[derive(Debug, Clone)]
pub struct TrackResult {
    /// World-from-camera pose of the current frame.
    pub world: PoseSE3,
    /// Relative pose mapping previous-frame coordinates into the current
    /// frame.
    pub relative: PoseSE3,
    /// Gauss-Newton iterations actually applied.
    pub iterations: usize,
    /// Mean robust cost per residual at the final pose.
    pub cost: f64,
    /// Fraction of pixels that survived the warp at the final pose.
    pub overlap: f64,
    /// Mean absolute photometric residual at the final pose.
    pub mean_photometric: f64,
}

struct Evaluation {
    cost_sum: f64,
    rows: usize,
    valid_pixels: usize,
    photometric_l1_sum: f64,
    normal: Option<(Matrix6<f64>, Vector6<f64>)>,
}

impl Evaluation {
    fn mean_cost(&self) -> f64 {
        if self.rows == 0 {
            f64::INFINITY
        } else {
            self.cost_sum / self.rows as f64
        }
    }

    fn overlap(&self, n_pixels: usize) -> f64 {
        self.valid_pixels as f64 / n_pixels as f64
    }

    fn mean_photometric(&self) -> f64 {
        if self.valid_pixels == 0 {
            f64::INFINITY
        } else {
            self.photometric_l1_sum / self.valid_pixels as f64
        }
    }
}

fn huber_cost(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        0.5 * r * r
    } else {
        delta * (a - 0.5 * delta)
    }
}

fn huber_weight(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        1.0
    } else {
        delta / a
    }
}

/// Evaluates residuals of the relative pose `T` (previous -> current) and,
/// when `build_normal` holds, the Gauss-Newton normal equations for a left
/// perturbation `T <- exp(xi) T`.
fn evaluate(
    prev_image: &ImageGrid,
    prev_depth: &DepthMap,
    cur_image: &ImageGrid,
    cur_depth: Option<&DepthMap>,
    k: &Intrinsics,
    pose: &PoseSE3,
    opts: &TrackOptions,
    build_normal: bool,
) -> Evaluation {
    let (w, h, channels) = (prev_image.width(), prev_image.height(), prev_image.channels());
    let sqrt_gamma = opts.gamma.sqrt();
    let mut ev = Evaluation {
        cost_sum: 0.0,
        rows: 0,
        valid_pixels: 0,
        photometric_l1_sum: 0.0,
        normal: build_normal.then(|| (Matrix6::zeros(), Vector6::zeros())),
    };
    for v in 0..h {
        for u in 0..w {
            let Some(d) = prev_depth.get(u, v) else { continue };
            let x = pose.transform_point(&backproject(k, u as f64, v as f64, d));
            if x[2] <= Z_EPS {
                continue;
            }
            let pu = k.fx * x[0] / x[2] + k.cx;
            let pv = k.fy * x[1] / x[2] + k.cy;
            let Some(first) = cur_image.sample_channel(0, pu, pv) else { continue };

            // d(u', v') / d(camera point), rows stacked as [du'; dv'].
            let inv_z = 1.0 / x[2];
            let ju = Vector3::new(k.fx * inv_z, 0.0, -k.fx * x[0] * inv_z * inv_z);
            let jv = Vector3::new(0.0, k.fy * inv_z, -k.fy * x[1] * inv_z * inv_z);

            let mut l1 = 0.0;
            for c in 0..channels {
                // Channel 0 is already sampled; the footprint is shared.
                let s = if c == 0 {
                    first
                } else {
                    match cur_image.sample_channel(c, pu, pv) {
                        Some(s) => s,
                        None => unreachable!("channels share one bilinear footprint"),
                    }
                };
                let r = s.value - prev_image.get(u, v, c);
                l1 += r.abs();
                ev.cost_sum += huber_cost(r, opts.huber_delta);
                ev.rows += 1;
                if let Some((hm, bv)) = ev.normal.as_mut() {
                    let weight = huber_weight(r, opts.huber_delta);
                    let grad_x = ju * s.ddx + jv * s.ddy;
                    let row = point_row_to_twist(&grad_x, &x);
                    *hm += weight * row * row.transpose();
                    *bv += weight * r * row;
                }
            }
            ev.photometric_l1_sum += l1 / channels as f64;
            ev.valid_pixels += 1;

            if opts.gamma > 0.0 {
                if let Some(sample) = cur_depth.and_then(|m| m.sample(pu, pv)) {
                    let rho = x[2] / sample.value;
                    let r = sqrt_gamma * (rho - 1.0) / (rho + 1.0);
                    ev.cost_sum += 0.5 * r * r;
                    ev.rows += 1;
                    if let Some((hm, bv)) = ev.normal.as_mut() {
                        // rho = z / D(u', v'): the point moves both the
                        // numerator and the lookup position.
                        let dz = Vector3::new(0.0, 0.0, 1.0);
                        let grad_rho = dz / sample.value
                            - (x[2] / (sample.value * sample.value)) * (ju * sample.ddx + jv * sample.ddy);
                        let drdrho = sqrt_gamma * 2.0 / ((rho + 1.0) * (rho + 1.0));
                        let row = point_row_to_twist(&(grad_rho * drdrho), &x);
                        *hm += row * row.transpose();
                        *bv += r * row;
                    }
                }
            }
        }
    }
    ev
}

/// Chains a gradient w.r.t. the transformed point into a gradient w.r.t. the
/// left-perturbation twist `[v, w]`: `dx/dxi = [I | -[x]_x]`, so the rotation
/// block is `x` cross `grad`.
#[inline]
fn point_row_to_twist(grad_x: &Vector3<f64>, x: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(
        grad_x[0],
        grad_x[1],
        grad_x[2],
        x[1] * grad_x[2] - x[2] * grad_x[1],
        x[2] * grad_x[0] - x[0] * grad_x[2],
        x[0] * grad_x[1] - x[1] * grad_x[0],
    )
}

/// Refines the relative pose of the current frame against the previous one.
///
/// `prev` bundles the previous frame's image, depth and world-from-camera
/// pose; `init` seeds the relative pose (previous -> current). The refined
/// world pose is `prev.world * relative.inverse()`. Passing the current
/// frame's depth map enables the depth-ratio residuals weighted by
/// `opts.gamma`.
pub fn track_frame(
    prev: (&ImageGrid, &DepthMap, &PoseSE3),
    cur: &ImageGrid,
    cur_depth: Option<&DepthMap>,
    k: &Intrinsics,
    init: &PoseSE3,
    opts: &TrackOptions,
) -> Result<TrackResult> {
    opts.validate()?;
    let (prev_image, prev_depth, prev_world) = prev;
    if !prev_image.same_shape(cur) {
        return Err(Error::Data(format!(
            "frame shapes differ: {}x{}x{} vs {}x{}x{}",
            prev_image.width(),
            prev_image.height(),
            prev_image.channels(),
            cur.width(),
            cur.height(),
            cur.channels()
        )));
    }
    if prev_depth.width() != prev_image.width() || prev_depth.height() != prev_image.height() {
        return Err(Error::Data(format!(
            "previous depth is {}x{}, image is {}x{}",
            prev_depth.width(),
            prev_depth.height(),
            prev_image.width(),
            prev_image.height()
        )));
    }
    if k.width != prev_image.width() || k.height != prev_image.height() {
        return Err(Error::Data(format!(
            "intrinsics are for {}x{}, image is {}x{}",
            k.width,
            k.height,
            prev_image.width(),
            prev_image.height()
        )));
    }
    let prev_valid = prev_depth.valid_fraction();
    if prev_valid < opts.min_prev_valid {
        return Err(Error::Data(format!(
            "previous depth is valid on only {:.1}% of pixels, need {:.0}%",
            100.0 * prev_valid,
            100.0 * opts.min_prev_valid
        )));
    }

    let n_pixels = prev_image.n_pixels();
    let mut pose = init.clone();
    let mut current = evaluate(prev_image, prev_depth, cur, cur_depth, k, &pose, opts, true);
    if current.rows == 0 {
        return Err(Error::TrackingLost {
            frame: None,
            reason: "no pixel survives the warp at the initial pose".into(),
        });
    }
    if !current.mean_cost().is_finite() {
        return Err(Error::TrackingLost {
            frame: None,
            reason: format!("residual cost is not finite at the initial pose ({})", current.mean_cost()),
        });
    }

    let mut iterations = 0;
    for _ in 0..opts.max_iterations {
        let (hm, bv) = current.normal.as_ref().expect("linearized evaluation");
        let Some(chol) = hm.cholesky() else {
            return Err(Error::TrackingLost {
                frame: None,
                reason: "normal equations are singular (not enough texture or support)".into(),
            });
        };
        let mut delta: Twist = -chol.solve(bv);
        if delta.norm() < opts.convergence_tol {
            break;
        }
        // Step halving: shrink the update until the robust cost decreases.
        let mut accepted = None;
        for _ in 0..12 {
            let trial_pose = PoseSE3::exp(&delta).compose(&pose);
            let trial = evaluate(prev_image, prev_depth, cur, cur_depth, k, &trial_pose, opts, true);
            if trial.rows > 0 && trial.mean_cost() < current.mean_cost() {
                accepted = Some((trial_pose, trial));
                break;
            }
            delta *= 0.5;
        }
        let Some((next_pose, next_eval)) = accepted else {
            break;
        };
        pose = next_pose;
        current = next_eval;
        iterations += 1;
        if delta.norm() < opts.convergence_tol {
            break;
        }
    }

    let overlap = current.overlap(n_pixels);
    let mean_photometric = current.mean_photometric();
    if overlap < opts.min_overlap {
        return Err(Error::TrackingLost {
            frame: None,
            reason: format!(
                "only {:.1}% of pixels survive the warp, need {:.0}%",
                100.0 * overlap,
                100.0 * opts.min_overlap
            ),
        });
    }
    if !mean_photometric.is_finite() || mean_photometric > opts.max_mean_photometric {
        return Err(Error::TrackingLost {
            frame: None,
            reason: format!(
                "mean photometric residual {mean_photometric:.3} exceeds {:.3}",
                opts.max_mean_photometric
            ),
        });
    }

    Ok(TrackResult {
        world: prev_world.compose(&pose.inverse()),
        relative: pose,
        iterations,
        cost: current.mean_cost(),
        overlap,
        mean_photometric,
    })
}

/// How [`run_odometry`] seeds each frame's pose.
#[derive(Debug, Clone, Copy)]
pub enum OdometryInit<'a> {
    /// Constant-velocity prediction from the trajectory so far.
    MotionModel,
    /// Externally supplied relative poses (frame i -> i+1), one per pair.
    External(&'a [PoseSE3]),
}

/// Tracks a whole sequence, chaining [`track_frame`] over adjacent frames.
///
/// The returned trajectory holds world-from-camera poses anchored at the
/// identity for frame 0. Tracking failures propagate with the frame index
/// attached.
pub fn run_odometry(
    frames: &[(ImageGrid, DepthMap)],
    k: &Intrinsics,
    init: &OdometryInit,
    opts: &TrackOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    if frames.len() < 2 {
        return Err(Error::Config(format!("odometry needs at least 2 frames, got {}", frames.len())));
    }
    if let OdometryInit::External(poses) = init {
        if poses.len() != frames.len() - 1 {
            return Err(Error::Config(format!(
                "external initialization needs {} relative poses, got {}",
                frames.len() - 1,
                poses.len()
            )));
        }
    }
    let mut trajectory = Trajectory::anchored(0);
    for t in 1..frames.len() {
        let guess = match init {
            OdometryInit::MotionModel => init_pose(InitMode::MotionModel, &trajectory, None)?,
            OdometryInit::External(poses) => init_pose(InitMode::External, &trajectory, Some(&poses[t - 1]))?,
        };
        let (prev_image, prev_depth) = &frames[t - 1];
        let (cur_image, cur_depth) = &frames[t];
        let prev_world = trajectory.pose(trajectory.len() - 1).clone();
        let result = track_frame(
            (prev_image, prev_depth, &prev_world),
            cur_image,
            Some(cur_depth),
            k,
            &guess,
            opts,
        )
        .map_err(|e| match e {
            Error::TrackingLost { reason, .. } => Error::TrackingLost { frame: Some(t), reason },
            other => other,
        })?;
        trajectory.push(t, result.world)?;
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{render_sequence, SceneSpec, SequenceSpec};

    fn point(u: f64, v: f64, disparity: f64) -> ImagePoint {
        ImagePoint { u, v, disparity }
    }

    #[test]
    fn reprojection_error_matches_the_pythagorean_cases() {
        let same = Correspondence::new(point(10.0, 20.0, 0.5), point(10.0, 20.0, 0.5)).unwrap();
        assert_eq!(reprojection_error(&same, ReprojectionMode::Pixel), 0.0);
        assert_eq!(reprojection_error(&same, ReprojectionMode::PixelDisparity), 0.0);

        let planar = Correspondence::new(point(13.0, 24.0, 0.5), point(10.0, 20.0, 0.5)).unwrap();
        assert_eq!(reprojection_error(&planar, ReprojectionMode::Pixel), 5.0);
        assert_eq!(reprojection_error(&planar, ReprojectionMode::PixelDisparity), 5.0);

        let spatial = Correspondence::new(point(13.0, 24.0, 12.5), point(10.0, 20.0, 0.5)).unwrap();
        assert_eq!(reprojection_error(&spatial, ReprojectionMode::Pixel), 5.0);
        assert_eq!(reprojection_error(&spatial, ReprojectionMode::PixelDisparity), 13.0);
    }

    #[test]
    fn disparity_residual_never_shrinks_the_error() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let c = Correspondence::new(
                point(64.0 * next(), 48.0 * next(), 0.01 + next()),
                point(64.0 * next(), 48.0 * next(), 0.01 + next()),
            )
            .unwrap();
            let planar = reprojection_error(&c, ReprojectionMode::Pixel);
            let spatial = reprojection_error(&c, ReprojectionMode::PixelDisparity);
            assert!(spatial >= planar);
        }
    }

    #[test]
    fn correspondences_require_positive_disparity() {
        assert!(Correspondence::new(point(1.0, 1.0, 0.0), point(1.0, 1.0, 0.5)).is_err());
        assert!(Correspondence::new(point(1.0, 1.0, 0.5), point(1.0, 1.0, -2.0)).is_err());
        assert!(Correspondence::new(point(f64::NAN, 1.0, 0.5), point(1.0, 1.0, 0.5)).is_err());
    }

    #[test]
    fn trajectory_invariants_are_enforced() {
        let off_anchor = PoseSE3::exp(&Twist::new(0.1, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(Trajectory::new(vec![(0, off_anchor)]).is_err());
        assert!(Trajectory::new(vec![]).is_err());
        let mut traj = Trajectory::anchored(0);
        traj.push(2, PoseSE3::identity()).unwrap();
        assert!(traj.push(2, PoseSE3::identity()).is_err());
        assert!(traj.push(1, PoseSE3::identity()).is_err());
    }

    #[test]
    fn relative_decomposition_round_trips() {
        let steps = [
            Twist::new(0.1, 0.0, 0.4, 0.0, 0.02, 0.0),
            Twist::new(-0.05, 0.02, 0.3, 0.01, 0.0, -0.005),
            Twist::new(0.0, 0.0, 0.5, 0.0, -0.03, 0.0),
        ];
        let mut traj = Trajectory::anchored(0);
        let mut world = PoseSE3::identity();
        for (i, s) in steps.iter().enumerate() {
            world = world.compose(&PoseSE3::exp(s).inverse());
            traj.push(i + 1, world.clone()).unwrap();
        }
        let rebuilt = Trajectory::from_relatives(&traj.to_relatives());
        assert_eq!(rebuilt.len(), traj.len());
        for (a, b) in traj.entries().iter().zip(rebuilt.entries()) {
            assert_eq!(a.0, b.0);
            assert!((a.1.rotation() - b.1.rotation()).norm() < 1e-12);
            assert!((a.1.translation() - b.1.translation()).norm() < 1e-12);
        }
    }

    #[test]
    fn motion_model_replays_the_last_relative_pose() {
        let step = PoseSE3::exp(&Twist::new(0.2, 0.0, 0.5, 0.0, 0.01, 0.0));
        let mut traj = Trajectory::anchored(0);
        let mut world = PoseSE3::identity();
        for i in 1..4 {
            world = world.compose(&step.inverse());
            traj.push(i, world.clone()).unwrap();
        }
        let predicted = init_pose(InitMode::MotionModel, &traj, None).unwrap();
        let err = predicted.inverse().compose(&step);
        assert!(err.rotation_angle() < 1e-12);
        assert!(err.translation().norm() < 1e-12);
    }

    #[test]
    fn init_pose_fallbacks_and_errors() {
        let traj = Trajectory::anchored(0);
        let p = init_pose(InitMode::MotionModel, &traj, None).unwrap();
        assert_eq!(p, PoseSE3::identity());
        assert!(matches!(init_pose(InitMode::External, &traj, None), Err(Error::Config(_))));
        let external = PoseSE3::exp(&Twist::new(0.1, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(init_pose(InitMode::External, &traj, Some(&external)).unwrap(), external);
    }

    /// Renders a textured flat-scene sequence and returns per-frame data
    /// plus the specification for ground-truth relative poses.
    fn rendered(
        seed: u64,
        size: usize,
        n: usize,
        step: &Twist,
    ) -> (Vec<(ImageGrid, DepthMap)>, SequenceSpec) {
        let k = Intrinsics::centered(size as f64, size, size).unwrap();
        let seq = SequenceSpec::constant_velocity(n, step, k).unwrap();
        let frames = render_sequence(&SceneSpec::flat(10.0, seed), &seq).unwrap();
        (frames.into_iter().map(|(img, depth, _)| (img, depth)).collect(), seq)
    }

    #[test]
    fn zero_motion_is_recovered_as_identity() {
        let (frames, _) = rendered(21, 32, 2, &Twist::zeros());
        let k = Intrinsics::centered(32.0, 32, 32).unwrap();
        let (img, depth) = &frames[0];
        let result = track_frame(
            (img, depth, &PoseSE3::identity()),
            &frames[1].0,
            Some(&frames[1].1),
            &k,
            &PoseSE3::identity(),
            &TrackOptions::default(),
        )
        .unwrap();
        let twist = result.relative.log().unwrap();
        assert!(twist.norm() < 1e-6, "expected identity, got twist norm {}", twist.norm());
    }

    #[test]
    fn tracked_relative_pose_matches_the_rendered_motion() {
        let step = Twist::new(0.12, -0.04, 0.3, 0.003, -0.006, 0.002);
        let (frames, seq) = rendered(22, 64, 2, &step);
        let k = Intrinsics::centered(64.0, 64, 64).unwrap();
        let truth = seq.relative(0, 1).unwrap();
        let (img, depth) = &frames[0];
        let result = track_frame(
            (img, depth, &PoseSE3::identity()),
            &frames[1].0,
            Some(&frames[1].1),
            &k,
            &PoseSE3::identity(),
            &TrackOptions::default(),
        )
        .unwrap();
        let err = result.relative.inverse().compose(&truth);
        assert!(
            err.rotation_angle().to_degrees() < 0.1,
            "rotation error {} deg",
            err.rotation_angle().to_degrees()
        );
        let step_len = truth.translation().norm();
        assert!(
            err.translation().norm() < 0.01 * step_len,
            "translation error {} vs step {step_len}",
            err.translation().norm()
        );
    }

    #[test]
    fn five_degree_init_error_still_converges() {
        let step = Twist::new(0.1, 0.0, 0.25, 0.0, 0.004, 0.0);
        let (frames, seq) = rendered(23, 64, 2, &step);
        let k = Intrinsics::centered(64.0, 64, 64).unwrap();
        let truth = seq.relative(0, 1).unwrap();
        let perturb = PoseSE3::exp(&Twist::new(0.0, 0.0, 0.0, 0.0, 5f64.to_radians(), 0.0));
        let (img, depth) = &frames[0];
        let result = track_frame(
            (img, depth, &PoseSE3::identity()),
            &frames[1].0,
            Some(&frames[1].1),
            &k,
            &perturb.compose(&truth),
            &TrackOptions::default(),
        )
        .unwrap();
        let err = result.relative.inverse().compose(&truth);
        assert!(err.rotation_angle().to_degrees() < 0.1);
        assert!(err.translation().norm() < 0.01 * truth.translation().norm());
    }

    #[test]
    fn external_truth_init_converges_faster_after_an_abrupt_turn() {
        // Straight constant-velocity motion, then a sudden 5-degree yaw on
        // the last step: the motion model seeds the old straight motion.
        let k = Intrinsics::centered(64.0, 64, 64).unwrap();
        let straight = Twist::new(0.0, 0.0, 0.3, 0.0, 0.0, 0.0);
        let turn = Twist::new(0.0, 0.0, 0.3, 0.0, 5f64.to_radians(), 0.0);
        let mut poses = vec![PoseSE3::identity()];
        for step in [straight, straight, turn] {
            let world = poses.last().unwrap().compose(&PoseSE3::exp(&step).inverse());
            poses.push(world);
        }
        let seq = SequenceSpec::new(poses, k.clone()).unwrap();
        let frames = render_sequence(&SceneSpec::flat(10.0, 24), &seq).unwrap();
        let truth = seq.relative(2, 3).unwrap();

        let mut history = Trajectory::anchored(0);
        for t in 1..=2 {
            history.push(t, seq.poses[t].clone()).unwrap();
        }
        let motion_guess = init_pose(InitMode::MotionModel, &history, None).unwrap();
        let external_guess = init_pose(InitMode::External, &history, Some(&truth)).unwrap();

        let prev_world = seq.poses[2].clone();
        let opts = TrackOptions::default();
        let (img, depth, _) = &frames[2];
        let run = |guess: &PoseSE3| {
            track_frame((img, depth, &prev_world), &frames[3].0, Some(&frames[3].1), &k, guess, &opts).unwrap()
        };
        let with_motion = run(&motion_guess);
        let with_external = run(&external_guess);
        for r in [&with_motion, &with_external] {
            let err = r.relative.inverse().compose(&truth);
            assert!(err.rotation_angle().to_degrees() < 0.1);
        }
        assert!(
            with_external.iterations < with_motion.iterations,
            "external init took {} iterations, motion model {}",
            with_external.iterations,
            with_motion.iterations
        );
    }

    #[test]
    fn depth_scale_rescales_translation_only() {
        let step = Twist::new(0.15, 0.0, 0.3, 0.0, 0.005, 0.0);
        let (frames, _) = rendered(25, 48, 2, &step);
        let k = Intrinsics::centered(48.0, 48, 48).unwrap();
        let opts = TrackOptions::default();
        let (img, depth) = &frames[0];
        let base = track_frame(
            (img, depth, &PoseSE3::identity()),
            &frames[1].0,
            Some(&frames[1].1),
            &k,
            &PoseSE3::identity(),
            &opts,
        )
        .unwrap();
        for s in [0.5, 2.0] {
            let prev_scaled = depth.scaled(s).unwrap();
            let cur_scaled = frames[1].1.scaled(s).unwrap();
            let scaled = track_frame(
                (img, &prev_scaled, &PoseSE3::identity()),
                &frames[1].0,
                Some(&cur_scaled),
                &k,
                &PoseSE3::identity(),
                &opts,
            )
            .unwrap();
            let rot_diff = scaled.relative.rotation() - base.relative.rotation();
            assert!(rot_diff.norm() < 1e-6, "s={s}: rotation drifted by {}", rot_diff.norm());
            let ratio = scaled.relative.translation().norm() / base.relative.translation().norm();
            assert!((ratio - s).abs() < 1e-4 * s, "s={s}: translation ratio {ratio}");
        }
    }

    #[test]
    fn static_sequence_yields_identity_trajectory() {
        let (frames, _) = rendered(26, 32, 4, &Twist::zeros());
        let k = Intrinsics::centered(32.0, 32, 32).unwrap();
        let traj = run_odometry(&frames, &k, &OdometryInit::MotionModel, &TrackOptions::default()).unwrap();
        assert_eq!(traj.len(), 4);
        for (_, pose) in traj.entries() {
            assert!(pose.rotation_angle() < 1e-6);
            assert!(pose.translation().norm() < 1e-6);
        }
    }

    #[test]
    fn tracked_trajectory_follows_the_rendered_one() {
        let step = Twist::new(0.08, 0.0, 0.35, 0.0, 0.005, 0.0);
        let n = 6;
        let (frames, seq) = rendered(27, 64, n, &step);
        let k = Intrinsics::centered(64.0, 64, 64).unwrap();
        let traj = run_odometry(&frames, &k, &OdometryInit::MotionModel, &TrackOptions::default()).unwrap();
        for t in 0..n {
            let err = traj.pose(t).inverse().compose(&seq.poses[t]);
            assert!(
                err.rotation_angle().to_degrees() < 0.1 * n as f64,
                "frame {t}: accumulated rotation error {}",
                err.rotation_angle().to_degrees()
            );
            assert!(
                err.translation().norm() < 0.05,
                "frame {t}: accumulated translation error {}",
                err.translation().norm()
            );
        }
    }

    #[test]
    fn sparse_previous_depth_is_rejected() {
        let (frames, _) = rendered(28, 16, 2, &Twist::zeros());
        let k = Intrinsics::centered(16.0, 16, 16).unwrap();
        let n = 16 * 16;
        let mut valid = vec![false; n];
        for v in valid.iter_mut().take(n / 10) {
            *v = true;
        }
        let sparse = DepthMap::new(16, 16, vec![10.0; n], valid).unwrap();
        let err = track_frame(
            (&frames[0].0, &sparse, &PoseSE3::identity()),
            &frames[1].0,
            None,
            &k,
            &PoseSE3::identity(),
            &TrackOptions::default(),
        );
        assert!(matches!(err, Err(Error::Data(_))), "got {err:?}");
    }

    #[test]
    fn textureless_frames_lose_tracking() {
        let flat = ImageGrid::constant(16, 16, 1, 0.5).unwrap();
        let depth = DepthMap::constant(16, 16, 10.0).unwrap();
        let k = Intrinsics::centered(16.0, 16, 16).unwrap();
        let err = track_frame(
            (&flat, &depth, &PoseSE3::identity()),
            &flat,
            None,
            &k,
            &PoseSE3::exp(&Twist::new(0.3, 0.0, 0.0, 0.0, 0.0, 0.0)),
            &TrackOptions::default(),
        );
        assert!(matches!(err, Err(Error::TrackingLost { .. })), "got {err:?}");
    }

    #[test]
    fn lost_tracking_reports_the_frame_index() {
        let (mut frames, _) = rendered(29, 32, 3, &Twist::new(0.0, 0.0, 0.2, 0.0, 0.0, 0.0));
        // Blank out the last frame: a constant image has no texture gradient
        // and its invalid depth map removes the depth-ratio rows, so the
        // normal equations collapse.
        frames[2].0 = ImageGrid::constant(32, 32, 3, 0.0).unwrap();
        frames[2].1 = DepthMap::new(32, 32, vec![10.0; 32 * 32], vec![false; 32 * 32]).unwrap();
        let k = Intrinsics::centered(32.0, 32, 32).unwrap();
        let err = run_odometry(&frames, &k, &OdometryInit::MotionModel, &TrackOptions::default());
        match err {
            Err(Error::TrackingLost { frame, .. }) => assert_eq!(frame, Some(2)),
            other => panic!("expected tracking lost at frame 2, got {other:?}"),
        }
    }
}
