//! Segment-based relative pose errors following the KITTI odometry
//! protocol.

use crate::error::{Error, Result};
use crate::odometry::Trajectory;
use crate::util::KahanSum;

/// Sub-trajectory lengths (meters) the protocol averages over.
pub const SEGMENT_LENGTHS_M: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

/// Averaged endpoint errors of all evaluated segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelErrors {
    /// Translation error as a percentage of segment length.
    pub t_err_percent: f64,
    /// Rotation error in degrees per 100 meters.
    pub r_err_deg_per_100m: f64,
    /// Number of (start frame, length) segments that fit the path.
    pub n_segments: usize,
}

/// Relative translation / rotation errors over standard segment lengths.
///
/// For every start frame and every length in [`SEGMENT_LENGTHS_M`], the
/// segment end is the first frame at which the ground-truth path length
/// (integrated along consecutive positions) reaches the target. The error
/// pose is the discrepancy between the predicted and ground-truth relative
/// motion of the segment endpoints, normalized by the segment length and
/// averaged over all segments. Trajectories are compared as given; no
/// alignment is applied first.
pub fn kitti_rel_errors(pred: &Trajectory, gt: &Trajectory) -> Result<RelErrors> {
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
    let n = gt.len();
    let positions = gt.positions();
    let mut dist = Vec::with_capacity(n);
    dist.push(0.0);
    for i in 1..n {
        dist.push(dist[i - 1] + (positions[i] - positions[i - 1]).norm());
    }

    let mut t_sum = KahanSum::new();
    let mut r_sum = KahanSum::new();
    let mut n_segments = 0usize;
    for first in 0..n {
        for &len in &SEGMENT_LENGTHS_M {
            let target = dist[first] + len;
            let Some(last) = (first + 1..n).find(|&i| dist[i] >= target) else { continue };
            // Relative motion of the endpoints in each trajectory, then the
            // discrepancy between the two.
            let delta_gt = gt.relative(last, first);
            let delta_pred = pred.relative(last, first);
            let error = delta_pred.inverse().compose(&delta_gt);
            t_sum.add(error.translation().norm() / len);
            r_sum.add(error.rotation_angle() / len);
            n_segments += 1;
        }
    }
    if n_segments == 0 {
        return Err(Error::Data(format!(
            "ground-truth path is only {:.1} m long; the shortest evaluated segment is {:.0} m",
            dist[n - 1],
            SEGMENT_LENGTHS_M[0]
        )));
    }
    let nf = n_segments as f64;
    Ok(RelErrors {
        t_err_percent: 100.0 * t_sum.value() / nf,
        r_err_deg_per_100m: (r_sum.value() / nf).to_degrees() * 100.0,
        n_segments,
    })
}
