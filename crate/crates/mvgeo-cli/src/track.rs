//! `mvgeo track` — frame-to-frame camera tracking over a dataset.
//!
//! Uses the dataset's depth maps as the geometry source and recovers the
//! camera trajectory by direct image alignment. The dataset poses are only
//! read when `init = external` asks for them as per-pair initial guesses.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use mvgeo::geometry::{DepthMap, ImageGrid, PoseSE3};
use mvgeo::odometry::{run_odometry, OdometryInit, TrackOptions};
use mvgeo::{io, Error, Result};

use crate::params::Params;
use crate::{data, logging};

#[derive(ClapArgs)]
pub struct Args {
    /// Dataset directory (frames, depths, poses, intrinsics).
    #[arg(long)]
    data: PathBuf,
    /// Optional `key = value` parameter file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trajectory output file (3x4 pose rows).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Weight of the depth-ratio residuals (0 disables them).
    #[arg(long)]
    gamma: Option<f64>,
    /// Huber threshold on photometric residuals.
    #[arg(long)]
    huber_delta: Option<f64>,
    /// Maximum Gauss-Newton iterations per frame.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Stop once the applied twist update is shorter than this.
    #[arg(long)]
    convergence_tol: Option<f64>,
    /// Lost-tracking threshold on surviving pixel fraction.
    #[arg(long)]
    min_overlap: Option<f64>,
    /// Lost-tracking threshold on the final mean photometric residual.
    #[arg(long)]
    max_mean_photometric: Option<f64>,
    /// Required fraction of valid pixels in the previous depth map.
    #[arg(long)]
    min_prev_valid: Option<f64>,
    /// Per-frame initialization: "motion-model" or "external" (dataset poses).
    #[arg(long)]
    init: Option<String>,
}

pub fn run(args: Args) -> Result<()> {
    let dataset = data::load_dataset(&args.data)?;
    let mut params = Params::load(args.config.as_deref())?;
    let defaults = TrackOptions::default();

    let opts = TrackOptions {
        gamma: params.value("gamma", args.gamma, defaults.gamma)?,
        huber_delta: params.value("huber_delta", args.huber_delta, defaults.huber_delta)?,
        max_iterations: params.value("max_iterations", args.max_iterations, defaults.max_iterations)?,
        convergence_tol: params.value("convergence_tol", args.convergence_tol, defaults.convergence_tol)?,
        min_overlap: params.value("min_overlap", args.min_overlap, defaults.min_overlap)?,
        max_mean_photometric: params.value(
            "max_mean_photometric",
            args.max_mean_photometric,
            defaults.max_mean_photometric,
        )?,
        min_prev_valid: params.value("min_prev_valid", args.min_prev_valid, defaults.min_prev_valid)?,
    };
    let init_name = params.value("init", args.init.clone(), "motion-model".to_string())?;
    let resolved = params.finish()?;
    logging::resolved("track configuration", &resolved);

    let external: Vec<PoseSE3>;
    let init = match init_name.as_str() {
        "motion-model" => OdometryInit::MotionModel,
        "external" => {
            external = data::relative_poses(&dataset.poses);
            OdometryInit::External(&external)
        }
        other => {
            return Err(Error::Config(format!(
                "init must be \"motion-model\" or \"external\", got {other:?}"
            )))
        }
    };

    let intrinsics = dataset.intrinsics;
    let frames: Vec<(ImageGrid, DepthMap)> =
        dataset.frames.into_iter().zip(dataset.depths).collect();
    let trajectory = run_odometry(&frames, &intrinsics, &init, &opts)?;

    if let Some(out) = &args.out {
        let world: Vec<PoseSE3> =
            trajectory.entries().iter().map(|(_, pose)| pose.clone()).collect();
        io::write_trajectory(out, &world)?;
        logging::info(&format!("wrote trajectory to {}", out.display()));
    }

    for (index, pose) in trajectory.entries() {
        let p = pose.translation();
        println!("pose {index} = {} {} {}", p.x, p.y, p.z);
    }
    Ok(())
}
