//! `mvgeo export-cloud` — back-project a depth map into a PLY point cloud,
//! optionally colored by an image of the same size.

use std::path::PathBuf;

use clap::Args as ClapArgs;
use mvgeo::geometry::point_cloud_from_depth;
use mvgeo::{io, Result};

use crate::params::Params;
use crate::logging;

#[derive(ClapArgs)]
pub struct Args {
    /// Depth map to back-project (PFM).
    #[arg(long)]
    depth: PathBuf,
    /// Pinhole intrinsics file.
    #[arg(long)]
    intrinsics: PathBuf,
    /// Optional image (PPM) providing per-point colors.
    #[arg(long)]
    image: Option<PathBuf>,
    /// Optional `key = value` parameter file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Back-project every n-th pixel in both directions.
    #[arg(long)]
    stride: Option<usize>,
    /// Output PLY file.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let mut params = Params::load(args.config.as_deref())?;
    let stride = params.value("stride", args.stride, 1usize)?;
    let resolved = params.finish()?;
    logging::resolved("export-cloud configuration", &resolved);

    let depth = io::read_pfm(&args.depth)?;
    let intrinsics = io::read_intrinsics(&args.intrinsics)?;
    let image = match &args.image {
        Some(path) => Some(io::read_ppm(path)?),
        None => None,
    };

    let cloud = point_cloud_from_depth(&depth, &intrinsics, image.as_ref(), stride)?;
    io::write_ply(&args.out, &cloud)?;
    println!("wrote {} points to {}", cloud.len(), args.out.display());
    Ok(())
}
