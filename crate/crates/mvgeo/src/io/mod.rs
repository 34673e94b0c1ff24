//! File formats: images (PPM), depth maps (PFM), camera trajectories
//! (12-value matrix rows), pinhole intrinsics, loss curves (CSV), point
//! clouds (PLY) and simple `key=value` configuration files.

mod csv;
mod intrinsics_file;
mod kitti;
mod kv;
mod pfm;
mod ply;
mod ppm;

pub use csv::{read_loss_csv, write_loss_csv};
pub use intrinsics_file::{read_intrinsics, write_intrinsics};
pub use kitti::{read_trajectory, write_trajectory};
pub use kv::{parse_kv, parse_kv_str, KvEntry};
pub use pfm::{read_pfm, write_pfm};
pub use ply::write_ply;
pub use ppm::{read_ppm, write_ppm};
