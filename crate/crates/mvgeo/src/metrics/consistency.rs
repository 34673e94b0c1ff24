//! Point-cloud overlap metrics: inlier fitness and RMSE under a distance
//! threshold.

use std::collections::HashMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::util::KahanSum;

/// Overlap statistics of two aligned point clouds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    /// Inlier correspondences divided by the number of target points.
    pub fitness: f64,
    /// RMSE of inlier correspondence distances (0 when there are none).
    pub rmse: f64,
    /// Number of inlier correspondences.
    pub n_corr: usize,
}

/// Matches every target point to its nearest source point and reports the
/// fraction whose distance stays within `threshold`, plus the RMSE over
/// those inliers.
///
/// The search is exact: source points are bucketed into a uniform grid of
/// cell size `threshold`, and any point within the threshold of a target
/// necessarily lies in one of the 27 surrounding cells.
pub fn consistency_metrics(source: &PointCloud, target: &PointCloud, threshold: f64) -> Result<ConsistencyReport> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::Config(format!("inlier threshold must be positive, got {threshold}")));
    }
    if source.is_empty() || target.is_empty() {
        return Err(Error::Data(format!(
            "point clouds must be non-empty, got {} source and {} target points",
            source.len(),
            target.len()
        )));
    }
    for (label, cloud) in [("source", source), ("target", target)] {
        if cloud.points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite() && p[2].is_finite())) {
            return Err(Error::Data(format!("{label} cloud contains non-finite points")));
        }
    }

    let cell = |p: &Vector3<f64>| -> (i64, i64, i64) {
        (
            (p[0] / threshold).floor() as i64,
            (p[1] / threshold).floor() as i64,
            (p[2] / threshold).floor() as i64,
        )
    };
    let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in source.points.iter().enumerate() {
        buckets.entry(cell(p)).or_default().push(i);
    }

    let threshold_sq = threshold * threshold;
    let mut n_corr = 0usize;
    let mut se = KahanSum::new();
    for t in &target.points {
        let (cx, cy, cz) = cell(t);
        let mut best = f64::INFINITY;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(ids) = buckets.get(&(cx + dx, cy + dy, cz + dz)) else { continue };
                    for &i in ids {
                        let d2 = (source.points[i] - t).norm_squared();
                        if d2 < best {
                            best = d2;
                        }
                    }
                }
            }
        }
        if best <= threshold_sq {
            n_corr += 1;
            se.add(best);
        }
    }
    let rmse = if n_corr == 0 { 0.0 } else { (se.value() / n_corr as f64).sqrt() };
    Ok(ConsistencyReport { fitness: n_corr as f64 / target.points.len() as f64, rmse, n_corr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: Vec<Vector3<f64>>) -> PointCloud {
        PointCloud { points, colors: None }
    }

    fn pseudo_random_cloud(n: usize, seed: u64, extent: f64) -> PointCloud {
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        cloud((0..n).map(|_| Vector3::new(next() * extent, next() * extent, next() * extent)).collect())
    }

    #[test]
    fn identical_clouds_are_fully_consistent() {
        let c = pseudo_random_cloud(50, 3, 5.0);
        let r = consistency_metrics(&c, &c, 0.01).unwrap();
        assert_eq!(r.fitness, 1.0);
        assert_eq!(r.rmse, 0.0);
        assert_eq!(r.n_corr, 50);
    }

    #[test]
    fn uniform_offset_beyond_threshold_scores_zero() {
        // Sparse grid with spacing far above the threshold, shifted by twice
        // the threshold: every nearest-neighbor distance is 2 * threshold.
        let threshold = 0.1;
        let pts: Vec<_> = (0..27)
            .map(|i| Vector3::new((i % 3) as f64, ((i / 3) % 3) as f64, (i / 9) as f64))
            .collect();
        let shifted: Vec<_> = pts.iter().map(|p| p + Vector3::new(2.0 * threshold, 0.0, 0.0)).collect();
        let r = consistency_metrics(&cloud(pts), &cloud(shifted), threshold).unwrap();
        assert_eq!(r.fitness, 0.0);
        assert_eq!(r.n_corr, 0);
        assert_eq!(r.rmse, 0.0);
    }

    #[test]
    fn fitness_is_monotone_in_the_threshold() {
        let source = pseudo_random_cloud(120, 5, 2.0);
        let target = pseudo_random_cloud(120, 9, 2.0);
        let mut last = 0.0;
        for threshold in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let r = consistency_metrics(&source, &target, threshold).unwrap();
            assert!(r.fitness >= last, "fitness dropped from {last} to {} at {threshold}", r.fitness);
            last = r.fitness;
        }
    }

    #[test]
    fn grid_search_matches_the_exhaustive_oracle() {
        let source = pseudo_random_cloud(100, 11, 3.0);
        let target = pseudo_random_cloud(100, 17, 3.0);
        for threshold in [0.15, 0.4, 1.0] {
            let r = consistency_metrics(&source, &target, threshold).unwrap();

            let mut n_corr = 0usize;
            let mut se = 0.0;
            for t in &target.points {
                let best = source
                    .points
                    .iter()
                    .map(|s| (s - t).norm_squared())
                    .fold(f64::INFINITY, f64::min);
                if best <= threshold * threshold {
                    n_corr += 1;
                    se += best;
                }
            }
            let rmse = if n_corr == 0 { 0.0 } else { (se / n_corr as f64).sqrt() };
            assert_eq!(r.n_corr, n_corr, "threshold {threshold}");
            assert!((r.fitness - n_corr as f64 / 100.0).abs() < 1e-12);
            assert!((r.rmse - rmse).abs() < 1e-10, "rmse {} vs {rmse}", r.rmse);
        }
    }

    #[test]
    fn negative_coordinates_use_the_right_cells() {
        let source = cloud(vec![Vector3::new(-0.05, -0.05, -0.05)]);
        let target = cloud(vec![Vector3::new(0.05, 0.05, 0.05)]);
        let d = (source.points[0] - target.points[0]).norm();
        let just_above = consistency_metrics(&source, &target, d * 1.001).unwrap();
        assert_eq!(just_above.n_corr, 1);
        let just_below = consistency_metrics(&source, &target, d * 0.999).unwrap();
        assert_eq!(just_below.n_corr, 0);
    }

    #[test]
    fn empty_and_invalid_inputs_are_rejected() {
        let c = pseudo_random_cloud(5, 3, 1.0);
        let empty = cloud(vec![]);
        assert!(matches!(consistency_metrics(&empty, &c, 0.1), Err(Error::Data(_))));
        assert!(matches!(consistency_metrics(&c, &empty, 0.1), Err(Error::Data(_))));
        assert!(matches!(consistency_metrics(&c, &c, 0.0), Err(Error::Config(_))));
        assert!(matches!(consistency_metrics(&c, &c, f64::NAN), Err(Error::Config(_))));
        let bad = cloud(vec![Vector3::new(f64::NAN, 0.0, 0.0)]);
        assert!(matches!(consistency_metrics(&bad, &c, 0.1), Err(Error::Data(_))));
    }
}
