//! Depth-map accuracy statistics with median scaling and a depth cap.

use crate::error::{Error, Result};
use crate::geometry::DepthMap;
use crate::util::{median_of, KahanSum};

/// Floor applied to scaled predictions before log-based statistics, which
/// would otherwise blow up on near-zero depths. The cap bounds only the
/// maximum.
pub const MIN_EVAL_DEPTH: f64 = 1e-3;

/// The eight standard depth statistics plus evaluation metadata.
///
/// Errors (`abs_rel` through `log10`) are non-negative; the threshold
/// accuracies satisfy `0 <= delta1 <= delta2 <= delta3 <= 1` by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthEvalReport {
    /// Mean of `|pred - gt| / gt`.
    pub abs_rel: f64,
    /// Mean of `(pred - gt)^2 / gt`.
    pub sq_rel: f64,
    /// Root mean squared depth error.
    pub rms: f64,
    /// Root mean squared error of natural-log depths.
    pub rms_log: f64,
    /// Mean absolute difference of base-10 log depths.
    pub log10: f64,
    /// Fraction of pixels with `max(pred/gt, gt/pred) < 1.25`.
    pub delta1: f64,
    /// Same with threshold `1.25^2`.
    pub delta2: f64,
    /// Same with threshold `1.25^3`.
    pub delta3: f64,
    /// Number of pixels that entered the evaluation.
    pub n_valid: usize,
    /// Median ratio `median(gt) / median(pred)` applied to the prediction.
    pub scale: f64,
}

/// Compares a predicted depth map against ground truth.
///
/// Only pixels where both maps are valid and the ground truth does not
/// exceed `cap` are evaluated. The prediction is first multiplied by
/// `median(gt) / median(pred)` over that set, removing the global scale the
/// prediction cannot know, then clamped to `[MIN_EVAL_DEPTH, cap]`.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap, cap: f64) -> Result<DepthEvalReport> {
    if !(cap.is_finite() && cap > 0.0) {
        return Err(Error::Config(format!("depth cap must be positive, got {cap}")));
    }
    if !pred.same_shape(gt) {
        return Err(Error::Data(format!(
            "depth maps have different shapes: {}x{} vs {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }

    let mut pred_vals = Vec::new();
    let mut gt_vals = Vec::new();
    for i in 0..gt.n_pixels() {
        if !(gt.validity()[i] && pred.validity()[i]) {
            continue;
        }
        let g = gt.values()[i];
        if g > cap {
            continue;
        }
        pred_vals.push(pred.values()[i]);
        gt_vals.push(g);
    }
    if gt_vals.is_empty() {
        return Err(Error::Data(format!(
            "no pixel has valid depth in both maps with ground truth at or below {cap}"
        )));
    }

    let n = gt_vals.len();
    let scale = median_of(&mut gt_vals.clone()) / median_of(&mut pred_vals.clone());
    let mut abs_rel = KahanSum::new();
    let mut sq_rel = KahanSum::new();
    let mut se = KahanSum::new();
    let mut se_log = KahanSum::new();
    let mut l10 = KahanSum::new();
    let (mut d1, mut d2, mut d3) = (0usize, 0usize, 0usize);
    for (&p, &g) in pred_vals.iter().zip(&gt_vals) {
        let p = (scale * p).clamp(MIN_EVAL_DEPTH, cap);
        let diff = p - g;
        abs_rel.add(diff.abs() / g);
        sq_rel.add(diff * diff / g);
        se.add(diff * diff);
        let dlog = p.ln() - g.ln();
        se_log.add(dlog * dlog);
        l10.add((p.log10() - g.log10()).abs());
        let ratio = (p / g).max(g / p);
        if ratio < 1.25 {
            d1 += 1;
        }
        if ratio < 1.25 * 1.25 {
            d2 += 1;
        }
        if ratio < 1.25 * 1.25 * 1.25 {
            d3 += 1;
        }
    }
    let nf = n as f64;
    Ok(DepthEvalReport {
        abs_rel: abs_rel.value() / nf,
        sq_rel: sq_rel.value() / nf,
        rms: (se.value() / nf).sqrt(),
        rms_log: (se_log.value() / nf).sqrt(),
        log10: l10.value() / nf,
        delta1: d1 as f64 / nf,
        delta2: d2 as f64 / nf,
        delta3: d3 as f64 / nf,
        n_valid: n,
        scale,
    })
}
