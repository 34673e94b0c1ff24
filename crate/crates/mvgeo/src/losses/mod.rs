//! Training losses over image pairs: photometric matching, edge-aware depth
//! smoothness, forward-backward depth consistency, their masks, and a fused
//! engine that evaluates the weighted total together with analytic gradients
//! with respect to both depth maps and the relative pose.

mod engine;
mod geometry_consistency;
mod masks;
mod photometric;
mod smoothness;
mod ssim;
mod weights;

pub use engine::{total_loss, total_loss_with_masks, LossBundle, LossInputs, MaskOverride};
pub use geometry_consistency::{
    depth_inconsistency, geometry_consistency_loss, relative_depth_diff, DepthInconsistency,
};
pub use masks::{auto_mask, self_discovered_mask};
pub use photometric::{masked_photometric_loss, photometric_loss, PhotometricLoss};
pub use smoothness::smoothness_loss;
pub use ssim::{ncc_map, ssim_map, SSIM_C1, SSIM_C2};
pub use weights::{LossOptions, LossWeights, PhotometricKind};
