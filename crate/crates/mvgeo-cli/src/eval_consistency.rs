//! `mvgeo eval-consistency` — geometric agreement between two depth maps.
//!
//! Both maps are back-projected through the same intrinsics into camera-frame
//! point clouds; every target point is then matched to its nearest source
//! point. Reported are the inlier fraction (fitness) and the RMSE over
//! inlier distances. The default inlier threshold adapts to the scene:
//! 2% of the median valid target depth.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use mvgeo::geometry::{point_cloud_from_depth, DepthMap};
use mvgeo::metrics::consistency_metrics;
use mvgeo::{io, Result};

use crate::params::Params;
use crate::{logging, report};

#[derive(ClapArgs)]
pub struct Args {
    /// Source depth map (PFM) to match against.
    #[arg(long)]
    source: PathBuf,
    /// Target depth map (PFM) whose points are scored.
    #[arg(long)]
    target: PathBuf,
    /// Shared pinhole intrinsics file.
    #[arg(long)]
    intrinsics: PathBuf,
    /// Optional `key = value` parameter file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inlier distance threshold (default: 0.02 x median target depth).
    #[arg(long)]
    threshold: Option<f64>,
    /// Back-project every n-th pixel in both directions.
    #[arg(long)]
    stride: Option<usize>,
    /// Also write the statistics as a one-row CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Median of the valid depths; NaN when the map is fully invalid (rejected
/// later as an unusable threshold).
fn median_valid_depth(depth: &DepthMap) -> f64 {
    let mut values: Vec<f64> = depth
        .values()
        .iter()
        .zip(depth.validity())
        .filter(|(_, &valid)| valid)
        .map(|(&v, _)| v)
        .collect();
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn run(args: Args) -> Result<()> {
    let intrinsics = io::read_intrinsics(&args.intrinsics)?;
    let source_depth = io::read_pfm(&args.source)?;
    let target_depth = io::read_pfm(&args.target)?;

    let mut params = Params::load(args.config.as_deref())?;
    let default_threshold = 0.02 * median_valid_depth(&target_depth);
    let threshold = params.value("threshold", args.threshold, default_threshold)?;
    let stride = params.value("stride", args.stride, 1usize)?;
    let resolved = params.finish()?;
    logging::resolved("eval-consistency configuration", &resolved);

    let source = point_cloud_from_depth(&source_depth, &intrinsics, None, stride)?;
    let target = point_cloud_from_depth(&target_depth, &intrinsics, None, stride)?;
    let r = consistency_metrics(&source, &target, threshold)?;

    println!("threshold = {threshold}");
    println!("fitness = {}", r.fitness);
    println!("inlier_rmse = {}", r.rmse);
    println!("n_correspondences = {}", r.n_corr);
    println!("source_points = {}", source.len());
    println!("target_points = {}", target.len());

    if let Some(csv) = &args.csv {
        let header = [
            "threshold",
            "fitness",
            "inlier_rmse",
            "n_correspondences",
            "source_points",
            "target_points",
        ];
        let row = vec![
            threshold.to_string(),
            r.fitness.to_string(),
            r.rmse.to_string(),
            r.n_corr.to_string(),
            source.len().to_string(),
            target.len().to_string(),
        ];
        report::write_csv(csv, &header, &row)?;
    }
    Ok(())
}
