//! On-disk dataset layout shared by `synth` (writer) and the processing
//! subcommands (readers).
//!
//! A dataset directory holds:
//!   - `intrinsics.txt`          pinhole parameters, one line
//!   - `poses.txt`               world-from-camera poses, one 3x4 row each
//!   - `frame_NNNN.ppm`          images, numbered from 0
//!   - `depth_NNNN.pfm`          depth maps, numbered from 0
//!   - `scene.cfg`               resolved generator configuration (synth only)

use std::path::{Path, PathBuf};

use mvgeo::geometry::{DepthMap, ImageGrid, Intrinsics, PoseSE3};
use mvgeo::{io, Error, Result};

use crate::logging;

pub fn image_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("frame_{index:04}.ppm"))
}

pub fn depth_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("depth_{index:04}.pfm"))
}

pub fn poses_path(dir: &Path) -> PathBuf {
    dir.join("poses.txt")
}

pub fn intrinsics_path(dir: &Path) -> PathBuf {
    dir.join("intrinsics.txt")
}

pub struct Dataset {
    pub frames: Vec<ImageGrid>,
    pub depths: Vec<DepthMap>,
    /// World-from-camera pose per frame.
    pub poses: Vec<PoseSE3>,
    pub intrinsics: Intrinsics,
}

/// Loads a dataset directory, checking that frame, depth and pose counts
/// agree and that every raster matches the intrinsics dimensions. Trajectory
/// warnings (re-orthonormalized rotations) go to stderr.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let intrinsics = io::read_intrinsics(&intrinsics_path(dir))?;
    let (poses, warnings) = io::read_trajectory(&poses_path(dir))?;
    for warning in &warnings {
        logging::info(&format!("warning: {warning}"));
    }

    let mut frames = Vec::new();
    let mut depths = Vec::new();
    loop {
        let index = frames.len();
        let image_file = image_path(dir, index);
        if !image_file.exists() {
            break;
        }
        let depth_file = depth_path(dir, index);
        if !depth_file.exists() {
            return Err(Error::Data(format!(
                "{} exists but {} is missing",
                image_file.display(),
                depth_file.display()
            )));
        }
        frames.push(io::read_ppm(&image_file)?);
        depths.push(io::read_pfm(&depth_file)?);
    }

    if frames.is_empty() {
        return Err(Error::Data(format!(
            "no frames found: expected {} and onwards",
            image_path(dir, 0).display()
        )));
    }
    if poses.len() != frames.len() {
        return Err(Error::Data(format!(
            "{} poses for {} frames in {}",
            poses.len(),
            frames.len(),
            dir.display()
        )));
    }
    for (index, frame) in frames.iter().enumerate() {
        if frame.width() != intrinsics.width || frame.height() != intrinsics.height {
            return Err(Error::Data(format!(
                "frame {index} is {}x{} but intrinsics expect {}x{}",
                frame.width(),
                frame.height(),
                intrinsics.width,
                intrinsics.height
            )));
        }
        if depths[index].width() != intrinsics.width || depths[index].height() != intrinsics.height {
            return Err(Error::Data(format!(
                "depth {index} is {}x{} but intrinsics expect {}x{}",
                depths[index].width(),
                depths[index].height(),
                intrinsics.width,
                intrinsics.height
            )));
        }
    }

    Ok(Dataset { frames, depths, poses, intrinsics })
}

/// Relative pose per adjacent pair: entry `i` maps frame-`i` coordinates
/// into frame `i + 1`.
pub fn relative_poses(world: &[PoseSE3]) -> Vec<PoseSE3> {
    (0..world.len().saturating_sub(1))
        .map(|i| world[i + 1].inverse().compose(&world[i]))
        .collect()
}
