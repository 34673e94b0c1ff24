/// Weights of the combined loss
/// `total = alpha * photometric + beta * smoothness + gamma * geometry`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Weight of the masked photometric term.
    pub alpha: f64,
    /// Weight of the edge-aware smoothness term.
    pub beta: f64,
    /// Weight of the depth-consistency term.
    pub gamma: f64,
    /// Share of plain L1 inside the photometric term; the remaining
    /// `1 - lambda` weights the structural dissimilarity `(1 - SSIM) / 2`.
    pub lambda: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { alpha: 1.0, beta: 0.1, gamma: 0.5, lambda: 0.15 }
    }
}

/// Which structural term the photometric loss blends with L1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhotometricKind {
    #[default]
    Ssim,
    /// Normalized cross-correlation over the same 3x3 window.
    Ncc,
}

/// Switches of the loss engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossOptions {
    /// Drop pixels where warping explains the image worse than doing nothing.
    pub use_auto_mask: bool,
    /// Down-weight the photometric term by `1 - depth inconsistency`.
    pub use_self_mask: bool,
    pub photometric: PhotometricKind,
    /// Skip the backward pass (cheaper when only values are needed).
    pub compute_gradients: bool,
}

impl Default for LossOptions {
    fn default() -> Self {
        LossOptions {
            use_auto_mask: true,
            use_self_mask: true,
            photometric: PhotometricKind::Ssim,
            compute_gradients: true,
        }
    }
}

impl LossOptions {
    pub fn forward_only(mut self) -> Self {
        self.compute_gradients = false;
        self
    }

    /// Plain (unmasked) photometric configuration.
    pub fn unmasked(mut self) -> Self {
        self.use_auto_mask = false;
        self.use_self_mask = false;
        self
    }
}
