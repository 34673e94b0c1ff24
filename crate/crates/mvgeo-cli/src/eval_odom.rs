//! `mvgeo eval-odom` — trajectory accuracy: absolute trajectory error after
//! least-squares alignment, plus relative translation/rotation errors over
//! standard segment lengths.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use mvgeo::metrics::{align_sim3, kitti_rel_errors, position_rmse, AlignDof};
use mvgeo::odometry::Trajectory;
use mvgeo::{io, Error, Result};

use crate::params::Params;
use crate::{logging, report};

#[derive(ClapArgs)]
pub struct Args {
    /// Predicted trajectory file (3x4 pose rows).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth trajectory file.
    #[arg(long)]
    gt: PathBuf,
    /// Optional `key = value` parameter file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Alignment degrees of freedom: 6 (rigid) or 7 (rigid + scale).
    #[arg(long)]
    dof: Option<u32>,
    /// Skip the segment-based relative errors.
    #[arg(long)]
    ate_only: Option<bool>,
    /// Also write the statistics as a one-row CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Reads a trajectory file and re-anchors it so the first pose is the
/// identity. Both error measures are invariant to this change of world
/// frame, and it admits files that describe a sub-sequence.
fn load_trajectory(path: &PathBuf) -> Result<Trajectory> {
    let (poses, warnings) = io::read_trajectory(path)?;
    for warning in &warnings {
        logging::info(&format!("warning: {}: {warning}", path.display()));
    }
    let first = poses
        .first()
        .ok_or_else(|| Error::Data(format!("{} holds no poses", path.display())))?;
    let origin = first.inverse();
    Trajectory::new(
        poses
            .iter()
            .enumerate()
            .map(|(index, pose)| (index, origin.compose(pose)))
            .collect(),
    )
}

fn rotation_angle_deg(rotation: &nalgebra::Matrix3<f64>) -> f64 {
    let cos = ((rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

pub fn run(args: Args) -> Result<()> {
    let mut params = Params::load(args.config.as_deref())?;
    let dof = AlignDof::from_number(params.value("dof", args.dof, 7)?)?;
    let ate_only = params.value("ate_only", args.ate_only, false)?;
    let resolved = params.finish()?;
    logging::resolved("eval-odom configuration", &resolved);

    let pred = load_trajectory(&args.pred)?;
    let gt = load_trajectory(&args.gt)?;

    // Compute every requested statistic before printing anything, so a
    // failure (e.g. a path too short for segment errors) leaves no partial
    // report behind.
    let alignment = align_sim3(&pred, &gt, dof)?;
    let ate_rmse = position_rmse(&pred.positions(), &gt.positions(), &alignment);
    let rel = if ate_only { None } else { Some(kitti_rel_errors(&pred, &gt)?) };

    println!("ate_rmse = {ate_rmse}");
    let mut header = vec!["ate_rmse"];
    let mut row = vec![ate_rmse.to_string()];

    if let Some(rel) = &rel {
        println!("t_err_percent = {}", rel.t_err_percent);
        println!("r_err_deg_per_100m = {}", rel.r_err_deg_per_100m);
        println!("n_segments = {}", rel.n_segments);
        header.extend(["t_err_percent", "r_err_deg_per_100m", "n_segments"]);
        row.push(rel.t_err_percent.to_string());
        row.push(rel.r_err_deg_per_100m.to_string());
        row.push(rel.n_segments.to_string());
    }

    let t = alignment.translation;
    println!("align_dof = {}", dof.number());
    println!("align_scale = {}", alignment.scale);
    println!("align_rotation_deg = {}", rotation_angle_deg(&alignment.rotation));
    println!("align_translation = {} {} {}", t.x, t.y, t.z);
    header.extend(["align_dof", "align_scale"]);
    row.push(dof.number().to_string());
    row.push(alignment.scale.to_string());

    if let Some(csv) = &args.csv {
        report::write_csv(csv, &header, &row)?;
    }
    Ok(())
}
