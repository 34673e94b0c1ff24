//! `mvgeo train` — optimize per-frame depth (and optionally the poses) of a
//! dataset snippet by gradient descent on the combined loss.

use std::fs;
use std::path::PathBuf;

use clap::Args as ClapArgs;
use mvgeo::geometry::PoseSE3;
use mvgeo::odometry::Trajectory;
use mvgeo::optimizer::{
    consistency_probe, optimize_snippet, DepthInit, PoseMode, TrainConfig,
};
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
    /// Output directory for the loss curve, refined depths and poses.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Gradient-descent steps.
    #[arg(long)]
    iterations: Option<usize>,
    /// Step size for depth logits.
    #[arg(long)]
    step_size: Option<f64>,
    /// Step size for pose twists (joint mode).
    #[arg(long)]
    pose_step_size: Option<f64>,
    /// Seed for randomized depth initialization.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of leading frames to optimize.
    #[arg(long)]
    snippet_length: Option<usize>,
    /// Evaluate every pair in both warp directions.
    #[arg(long)]
    bidirectional: Option<bool>,
    /// Photometric weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Smoothness weight.
    #[arg(long)]
    beta: Option<f64>,
    /// Depth-consistency weight.
    #[arg(long)]
    gamma: Option<f64>,
    /// L1 share inside the photometric term.
    #[arg(long)]
    lambda: Option<f64>,
    /// Drop pixels where warping beats doing nothing.
    #[arg(long)]
    auto_mask: Option<bool>,
    /// Down-weight photometric residuals by depth inconsistency.
    #[arg(long)]
    self_mask: Option<bool>,
    /// Depth start: "truth", "constant D" or "random D".
    #[arg(long)]
    depth_init: Option<String>,
    /// Pose handling: "frozen" or "joint".
    #[arg(long)]
    pose_mode: Option<String>,
    /// Pose start: "truth" or "identity".
    #[arg(long)]
    pose_init: Option<String>,
}

enum DepthStart {
    Truth,
    Constant(f64),
    Random(f64),
}

fn parse_depth_start(spec: &str) -> Result<DepthStart> {
    let tokens: Vec<&str> = spec.split_whitespace().collect();
    let bad = || {
        Error::Config(format!(
            "depth_init must be \"truth\", \"constant D\" or \"random D\", got {spec:?}"
        ))
    };
    match tokens.as_slice() {
        ["truth"] => Ok(DepthStart::Truth),
        ["constant", d] => Ok(DepthStart::Constant(d.parse().map_err(|_| bad())?)),
        ["random", d] => Ok(DepthStart::Random(d.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

pub fn run(args: Args) -> Result<()> {
    let dataset = data::load_dataset(&args.data)?;
    let mut params = Params::load(args.config.as_deref())?;
    let defaults = TrainConfig::default();

    let mut config = TrainConfig {
        iterations: params.value("iterations", args.iterations, defaults.iterations)?,
        step_size: params.value("step_size", args.step_size, defaults.step_size)?,
        pose_step_size: params.value("pose_step_size", args.pose_step_size, defaults.pose_step_size)?,
        seed: params.value("seed", args.seed, defaults.seed)?,
        snippet_length: params.value("snippet_length", args.snippet_length, defaults.snippet_length)?,
        bidirectional: params.value("bidirectional", args.bidirectional, defaults.bidirectional)?,
        ..defaults
    };
    config.weights.alpha = params.value("alpha", args.alpha, config.weights.alpha)?;
    config.weights.beta = params.value("beta", args.beta, config.weights.beta)?;
    config.weights.gamma = params.value("gamma", args.gamma, config.weights.gamma)?;
    config.weights.lambda = params.value("lambda", args.lambda, config.weights.lambda)?;
    config.options.use_auto_mask =
        params.value("auto_mask", args.auto_mask, config.options.use_auto_mask)?;
    config.options.use_self_mask =
        params.value("self_mask", args.self_mask, config.options.use_self_mask)?;

    let depth_spec = params.value("depth_init", args.depth_init.clone(), "constant 10".to_string())?;
    let pose_mode_name = params.value("pose_mode", args.pose_mode.clone(), "frozen".to_string())?;
    let pose_init_name = params.value("pose_init", args.pose_init.clone(), "truth".to_string())?;
    let resolved = params.finish()?;
    logging::resolved("train configuration", &resolved);

    let n = config.snippet_length;
    if dataset.frames.len() < n {
        return Err(Error::Config(format!(
            "snippet length {n} exceeds the {} frames in {}",
            dataset.frames.len(),
            args.data.display()
        )));
    }

    let depth_start = parse_depth_start(&depth_spec)?;
    let init = match &depth_start {
        DepthStart::Truth => DepthInit::Maps(&dataset.depths[..n]),
        DepthStart::Constant(d) => DepthInit::Constant(*d),
        DepthStart::Random(d) => DepthInit::Randomized(*d),
    };

    let pair_poses: Vec<PoseSE3> = match pose_init_name.as_str() {
        "truth" => data::relative_poses(&dataset.poses[..n]),
        "identity" => vec![PoseSE3::identity(); n - 1],
        other => {
            return Err(Error::Config(format!(
                "pose_init must be \"truth\" or \"identity\", got {other:?}"
            )))
        }
    };
    let pose_mode = match pose_mode_name.as_str() {
        "frozen" => PoseMode::Frozen(&pair_poses),
        "joint" => PoseMode::Joint(&pair_poses),
        other => {
            return Err(Error::Config(format!(
                "pose_mode must be \"frozen\" or \"joint\", got {other:?}"
            )))
        }
    };

    let state = optimize_snippet(&dataset.frames, &dataset.intrinsics, &config, &init, &pose_mode)?;

    if logging::level() >= logging::Level::Debug {
        for trace in &state.history {
            logging::debug(&format!(
                "step {} total {} photometric {} smoothness {} geometry {}",
                trace.step, trace.total, trace.photometric, trace.smoothness, trace.geometry
            ));
        }
    }

    let probe = consistency_probe(&state, &dataset.depths[..n])?;

    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        io::write_loss_csv(&out.join("loss.csv"), &state.history)?;
        for frame in 0..n {
            io::write_pfm(&data::depth_path(out, frame), &state.depth_map(frame)?)?;
        }
        let mut relatives = Vec::with_capacity(n - 1);
        for pair in 0..n - 1 {
            relatives.push(state.pair_pose(pair)?);
        }
        let trajectory = Trajectory::from_relatives(&relatives);
        let world: Vec<PoseSE3> =
            trajectory.entries().iter().map(|(_, pose)| pose.clone()).collect();
        io::write_trajectory(&data::poses_path(out), &world)?;
    }

    let last = state
        .history
        .last()
        .ok_or_else(|| Error::Data("optimization produced an empty loss history".into()))?;
    println!("steps = {}", state.steps);
    println!("total = {}", last.total);
    println!("photometric = {}", last.photometric);
    println!("smoothness = {}", last.smoothness);
    println!("geometry = {}", last.geometry);
    let ratios: Vec<String> = probe.ratios.iter().map(|r| r.to_string()).collect();
    println!("scale_ratios = {}", ratios.join(" "));
    println!("scale_spread = {}", probe.spread);
    Ok(())
}
