//! Differentiable multi-view geometry toolkit.
//!
//! Builds the pieces needed to optimize dense depth and camera motion directly
//! against image evidence: pinhole projection and SE(3) kinematics, a
//! view-synthesis warp with analytic derivatives, photometric / smoothness /
//! depth-consistency losses, a synthetic plane-scene renderer for controlled
//! experiments, a gradient-descent snippet optimizer, a frame-to-frame pose
//! tracker, and depth / trajectory / point-cloud evaluation metrics.

pub mod error;
pub mod geometry;
pub mod gradcheck;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod odometry;
pub mod optimizer;
pub mod oracle;
mod util;

pub use error::{Error, Result};
