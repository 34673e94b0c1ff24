//! Evaluation protocols: depth-map accuracy with median scaling, absolute
//! trajectory error after similarity alignment, KITTI segment-based
//! relative errors, and point-cloud consistency.

mod alignment;
mod consistency;
mod depth;
mod kitti;

pub use alignment::{align_points, align_sim3, ate, position_rmse, AlignDof, SimilarityTransform};
pub use consistency::{consistency_metrics, ConsistencyReport};
pub use depth::{depth_metrics, DepthEvalReport, MIN_EVAL_DEPTH};
pub use kitti::{kitti_rel_errors, RelErrors, SEGMENT_LENGTHS_M};

use crate::error::Result;
use crate::odometry::Trajectory;

/// Combined odometry evaluation: ATE after alignment plus the KITTI
/// relative errors on the raw (unaligned) trajectories.
#[derive(Debug, Clone)]
pub struct OdomEvalReport {
    pub ate_rmse: f64,
    pub t_err_percent: f64,
    pub r_err_deg_per_100m: f64,
    /// Similarity transform applied to the prediction for the ATE.
    pub alignment: SimilarityTransform,
}

impl OdomEvalReport {
    pub fn evaluate(pred: &Trajectory, gt: &Trajectory, dof: AlignDof) -> Result<Self> {
        let alignment = align_sim3(pred, gt, dof)?;
        let ate_rmse = position_rmse(&pred.positions(), &gt.positions(), &alignment);
        let rel = kitti_rel_errors(pred, gt)?;
        Ok(OdomEvalReport {
            ate_rmse,
            t_err_percent: rel.t_err_percent,
            r_err_deg_per_100m: rel.r_err_deg_per_100m,
            alignment,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};

    use crate::geometry::PoseSE3;

    /// Gentle arc: long enough for 100 m segments, curved enough for
    /// alignment to be well-posed.
    fn arc(scale: f64) -> Trajectory {
        let entries = (0..12)
            .map(|i| {
                let p = scale * Vector3::new(10.0 * i as f64, 2.0 * (0.3 * i as f64).sin(), 0.0);
                (i, PoseSE3::new(Matrix3::identity(), p).unwrap())
            })
            .collect();
        Trajectory::new(entries).unwrap()
    }

    #[test]
    fn perfect_odometry_reports_zeros() {
        let gt = arc(1.0);
        let r = OdomEvalReport::evaluate(&gt, &gt, AlignDof::Sim7).unwrap();
        assert!(r.ate_rmse < 1e-12);
        assert_eq!(r.t_err_percent, 0.0);
        assert_eq!(r.r_err_deg_per_100m, 0.0);
        assert!((r.alignment.scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_drift_shows_in_relative_errors_but_not_aligned_ate() {
        let gt = arc(1.0);
        let pred = arc(1.05);
        let r = OdomEvalReport::evaluate(&pred, &gt, AlignDof::Sim7).unwrap();
        assert!(r.ate_rmse < 1e-9, "seven-dof alignment should absorb the scale, ate {}", r.ate_rmse);
        assert!((r.t_err_percent - 5.0).abs() < 0.2, "t_err {}", r.t_err_percent);
    }
}
