//! Closed-form similarity alignment of trajectories and the absolute
//! trajectory error built on it.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::odometry::Trajectory;
use crate::util::KahanSum;

/// Degrees of freedom of the alignment: rigid (rotation + translation) or
/// full similarity (plus a global scale).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignDof {
    Rigid6,
    Sim7,
}

impl AlignDof {
    /// Parses the conventional 6/7 encoding.
    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            6 => Ok(AlignDof::Rigid6),
            7 => Ok(AlignDof::Sim7),
            other => Err(Error::Config(format!("alignment degrees of freedom must be 6 or 7, got {other}"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            AlignDof::Rigid6 => 6,
            AlignDof::Sim7 => 7,
        }
    }
}

/// A similarity transform `p -> scale * rotation * p + translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform { scale: 1.0, rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }
}

/// Least-squares similarity transform taking `src` points onto `dst`
/// (closed form, no iteration).
///
/// With `Rigid6` the scale is pinned to 1. Needs at least three points with
/// genuine spread: collinear or coincident positions leave the rotation
/// about the line axis unobservable and are rejected.
pub fn align_points(src: &[Vector3<f64>], dst: &[Vector3<f64>], dof: AlignDof) -> Result<SimilarityTransform> {
    if src.len() != dst.len() {
        return Err(Error::Data(format!(
            "point sets have different lengths: {} vs {}",
            src.len(),
            dst.len()
        )));
    }
    let n = src.len();
    if n < 3 {
        return Err(Error::Data(format!("alignment needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mu_src: Vector3<f64> = src.iter().sum::<Vector3<f64>>() / nf;
    let mu_dst: Vector3<f64> = dst.iter().sum::<Vector3<f64>>() / nf;

    let mut covariance = Matrix3::zeros();
    let mut src_var = 0.0;
    for (x, y) in src.iter().zip(dst) {
        let xc = x - mu_src;
        let yc = y - mu_dst;
        covariance += yc * xc.transpose();
        src_var += xc.norm_squared();
    }
    covariance /= nf;
    src_var /= nf;

    let svd = covariance.svd(true, true);
    let (u, v_t) = (svd.u.expect("3x3 SVD"), svd.v_t.expect("3x3 SVD"));
    let d = svd.singular_values;
    // Spread checks: d[0] ~ 0 means all positions coincide; d[1] ~ 0 means
    // they lie on a line.
    if d[0] <= 1e-12 * src_var.max(1.0) {
        return Err(Error::Data("positions coincide; alignment is unconstrained".into()));
    }
    if d[1] <= 1e-9 * d[0] {
        return Err(Error::Data(
            "positions are collinear; rotation about the line axis is unconstrained".into(),
        ));
    }

    // Keep the rotation proper: flip the weakest axis when the raw solution
    // would be a reflection.
    let reflection = (u.determinant() * v_t.determinant()) < 0.0;
    let sign = if reflection { -1.0 } else { 1.0 };
    let mut s_mat = Matrix3::identity();
    s_mat[(2, 2)] = sign;
    let rotation = u * s_mat * v_t;

    let scale = match dof {
        AlignDof::Rigid6 => 1.0,
        AlignDof::Sim7 => {
            if src_var <= 0.0 {
                return Err(Error::Data("positions coincide; scale is unconstrained".into()));
            }
            (d[0] + d[1] + sign * d[2]) / src_var
        }
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Data(format!("alignment produced a degenerate scale {scale}")));
    }
    let translation = mu_dst - scale * (rotation * mu_src);
    Ok(SimilarityTransform { scale, rotation, translation })
}

/// RMSE of `dst - transform(src)` position residuals.
pub fn position_rmse(src: &[Vector3<f64>], dst: &[Vector3<f64>], transform: &SimilarityTransform) -> f64 {
    let mut se = KahanSum::new();
    for (x, y) in src.iter().zip(dst) {
        se.add((y - transform.apply(x)).norm_squared());
    }
    (se.value() / src.len() as f64).sqrt()
}

fn matched_positions(pred: &Trajectory, gt: &Trajectory) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>)> {
    if pred.len() != gt.len() {
        return Err(Error::Data(format!(
            "trajectories have different lengths: {} vs {}",
            pred.len(),
            gt.len()
        )));
    }
    for (a, b) in pred.entries().iter().zip(gt.entries()) {
        if a.0 != b.0 {
            return Err(Error::Data(format!("trajectories disagree on frame indices: {} vs {}", a.0, b.0)));
        }
    }
    Ok((pred.positions(), gt.positions()))
}

/// Least-squares similarity transform taking predicted camera centers onto
/// the ground-truth ones. See [`align_points`].
pub fn align_sim3(pred: &Trajectory, gt: &Trajectory, dof: AlignDof) -> Result<SimilarityTransform> {
    let (src, dst) = matched_positions(pred, gt)?;
    align_points(&src, &dst, dof)
}

/// Absolute trajectory error: position RMSE after similarity alignment.
pub fn ate(pred: &Trajectory, gt: &Trajectory, dof: AlignDof) -> Result<f64> {
    let (src, dst) = matched_positions(pred, gt)?;
    let transform = align_points(&src, &dst, dof)?;
    Ok(position_rmse(&src, &dst, &transform))
}
