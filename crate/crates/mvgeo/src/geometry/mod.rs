//! Camera model, pixel grids, SE(3) kinematics and the differentiable warp.

mod camera;
mod depth_param;
mod grid;
mod intrinsics;
mod se3;
mod warp;

pub use camera::{
    backproject, point_cloud_from_depth, project, project_pixel, project_pixel_via_points,
    PixelProjection, Projection, Z_EPS,
};
pub use depth_param::{
    depth_from_logit, depth_from_logit_derivative, depth_to_sigmoid, logit_from_depth,
    sigmoid_to_depth, DEPTH_MAX, DEPTH_MIN,
};
pub use grid::{BilinearSample, DepthMap, ImageGrid, PixelMask, PointCloud};
pub(crate) use grid::BilinearFootprint;
pub use intrinsics::Intrinsics;
pub use se3::{nearest_rotation, PoseSE3, Twist};
pub use warp::{synthesize_depth, warp_image, SynthesizedDepth};
