//! Direct gradient-descent training of per-frame depth fields and relative
//! poses on short image snippets.
//!
//! Depth is optimized through unconstrained per-pixel logits (decoded with the
//! bounded inverse-sigmoid parameterization), poses through their twist
//! coordinates, with the fused objective summed over adjacent frame pairs in
//! both directions. Plain fixed-step gradient descent keeps runs bit-for-bit
//! reproducible: no momentum or adaptive state, and a fixed evaluation order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    depth_from_logit, depth_from_logit_derivative, logit_from_depth, DepthMap, ImageGrid,
    Intrinsics, PoseSE3, Twist, DEPTH_MAX, DEPTH_MIN,
};
use crate::losses::{total_loss, LossInputs, LossOptions, LossWeights};
use crate::util::median_of;

/// Hyper-parameters of one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub options: LossOptions,
    /// Fixed gradient-descent step for depth logits. The objective is a mean
    /// over pixels, so per-logit gradients carry a 1/(pixel count) factor;
    /// useful steps are therefore much larger than 1.
    pub step_size: f64,
    /// Step for pose twists in joint mode. Twist gradients aggregate over the
    /// whole image and sit orders of magnitude above per-logit gradients, so
    /// they get their own, much smaller step.
    pub pose_step_size: f64,
    pub iterations: usize,
    /// Seeds randomized initialization; everything else is deterministic.
    pub seed: u64,
    /// Number of leading frames actually optimized.
    pub snippet_length: usize,
    /// Also evaluate every pair in the reversed direction (b warped into a).
    pub bidirectional: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            weights: LossWeights::default(),
            options: LossOptions::default(),
            step_size: 20.0,
            pose_step_size: 0.005,
            iterations: 100,
            seed: 0,
            snippet_length: 3,
            bidirectional: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(self.pose_step_size.is_finite() && self.pose_step_size > 0.0) {
            return Err(Error::Config(format!("pose step size must be positive, got {}", self.pose_step_size)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.snippet_length < 2 {
            return Err(Error::Config(format!(
                "a snippet needs at least 2 frames, got length {}",
                self.snippet_length
            )));
        }
        Ok(())
    }
}

/// How the per-frame depth logits start off.
#[derive(Debug, Clone, Copy)]
pub enum DepthInit<'a> {
    /// Every pixel at the given depth.
    Constant(f64),
    /// Uniform logit jitter of +-0.5 around the given depth, seeded by the
    /// train config.
    Randomized(f64),
    /// Per-frame maps, e.g. ground truth or a rescaled copy of it.
    Maps(&'a [DepthMap]),
}

/// What happens to the relative poses during training.
#[derive(Debug, Clone, Copy)]
pub enum PoseMode<'a> {
    /// Poses pinned to the given adjacent-pair transforms (frame i to i+1);
    /// only depth is optimized.
    Frozen(&'a [PoseSE3]),
    /// Poses start at the given transforms and are optimized jointly.
    Joint(&'a [PoseSE3]),
}

/// Loss components at one training step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTrace {
    pub step: usize,
    pub total: f64,
    pub photometric: f64,
    pub smoothness: f64,
    pub geometry: f64,
}

/// Optimization variables and the recorded loss curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    /// Per-frame depth logits, row-major H*W.
    pub logits: Vec<Vec<f64>>,
    /// Per-adjacent-pair twist; `exp(twists[i])` maps frame-i points into
    /// frame i+1.
    pub twists: Vec<Twist>,
    /// Update steps applied.
    pub steps: usize,
    /// Objective value at every step: entry `s` is the state after `s`
    /// updates, so the curve has `iterations + 1` points.
    pub history: Vec<LossTrace>,
    pub width: usize,
    pub height: usize,
}

impl TrainState {
    /// Decoded depth of one frame; every pixel is valid and inside
    /// `(DEPTH_MIN, DEPTH_MAX)` by construction.
    pub fn depth_map(&self, frame: usize) -> Result<DepthMap> {
        let logits = self
            .logits
            .get(frame)
            .ok_or_else(|| Error::Data(format!("frame {frame} out of range for {} frames", self.logits.len())))?;
        DepthMap::from_values(self.width, self.height, logits.iter().copied().map(depth_from_logit).collect())
    }

    /// Relative pose of one adjacent pair (frame `pair` to `pair + 1`).
    pub fn pair_pose(&self, pair: usize) -> Result<PoseSE3> {
        let twist = self
            .twists
            .get(pair)
            .ok_or_else(|| Error::Data(format!("pair {pair} out of range for {} pairs", self.twists.len())))?;
        Ok(PoseSE3::exp(twist))
    }

    /// Loss curve with the total replaced by its running minimum; each entry
    /// keeps the components of the step that attained that minimum. Useful for
    /// plotting noisy curves without losing the raw history.
    pub fn smoothed_history(&self) -> Vec<LossTrace> {
        let mut out = Vec::with_capacity(self.history.len());
        let mut best: Option<LossTrace> = None;
        for entry in &self.history {
            let replace = best.is_none_or(|b| entry.total < b.total);
            if replace {
                best = Some(*entry);
            }
            let mut row = best.unwrap();
            row.step = entry.step;
            out.push(row);
        }
        out
    }
}

/// Per-frame median scale of a trained state against reference depths.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyProbe {
    /// `median(D_i / truth_i)` over pixels valid in the reference.
    pub ratios: Vec<f64>,
    /// `max(ratios) / min(ratios)`; 1 means perfectly scale-consistent.
    pub spread: f64,
}

/// Quantifies cross-frame scale consistency: identical per-frame scales give
/// spread 1 regardless of whether the common scale matches the reference.
pub fn consistency_probe(state: &TrainState, truth: &[DepthMap]) -> Result<ConsistencyProbe> {
    if truth.len() != state.logits.len() {
        return Err(Error::Data(format!(
            "probe got {} reference maps for {} frames",
            truth.len(),
            state.logits.len()
        )));
    }
    let mut ratios = Vec::with_capacity(truth.len());
    for (frame, reference) in truth.iter().enumerate() {
        if reference.width() != state.width || reference.height() != state.height {
            return Err(Error::Data(format!("reference map {frame} has the wrong shape")));
        }
        let mut samples: Vec<f64> = state.logits[frame]
            .iter()
            .enumerate()
            .filter_map(|(i, &logit)| {
                let (u, v) = (i % state.width, i / state.width);
                reference.get(u, v).map(|t| depth_from_logit(logit) / t)
            })
            .collect();
        if samples.is_empty() {
            return Err(Error::Data(format!("reference map {frame} has no valid pixels")));
        }
        ratios.push(median_of(&mut samples));
    }
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    Ok(ConsistencyProbe { ratios, spread: max / min })
}

/// Copy of a depth map with every valid value multiplied by `scale`.
pub fn scale_depth(map: &DepthMap, scale: f64) -> Result<DepthMap> {
    let (w, h) = (map.width(), map.height());
    let mut values = map.values().to_vec();
    let valid: Vec<bool> = (0..w * h).map(|i| map.is_valid(i % w, i / w)).collect();
    for (value, ok) in values.iter_mut().zip(&valid) {
        if *ok {
            *value *= scale;
        }
    }
    DepthMap::new(w, h, values, valid)
}

/// Minimizes the fused objective over the first `snippet_length` frames with
/// fixed-step gradient descent. Deterministic: identical inputs and config
/// produce a bit-identical state.
///
/// The first evaluation reports setup problems as-is; once stepping has
/// started, any evaluation failure or non-finite loss is reported as
/// divergence at the offending step.
pub fn optimize_snippet(
    frames: &[ImageGrid],
    k: &Intrinsics,
    config: &TrainConfig,
    init: &DepthInit,
    pose_mode: &PoseMode,
) -> Result<TrainState> {
    config.validate()?;
    k.validate()?;
    if frames.len() < config.snippet_length {
        return Err(Error::Config(format!(
            "snippet length {} exceeds the {} provided frames",
            config.snippet_length,
            frames.len()
        )));
    }
    let frames = &frames[..config.snippet_length];
    let (w, h) = (k.width, k.height);
    for (i, f) in frames.iter().enumerate() {
        if f.width() != w || f.height() != h {
            return Err(Error::Data(format!(
                "frame {i} is {}x{}, expected {w}x{h}",
                f.width(),
                f.height()
            )));
        }
    }

    let n_pairs = frames.len() - 1;
    let (initial_poses, frozen) = match pose_mode {
        PoseMode::Frozen(poses) => (*poses, true),
        PoseMode::Joint(poses) => (*poses, false),
    };
    if initial_poses.len() != n_pairs {
        return Err(Error::Config(format!(
            "{} pair poses provided for {} adjacent pairs",
            initial_poses.len(),
            n_pairs
        )));
    }
    let mut twists = Vec::with_capacity(n_pairs);
    for pose in initial_poses {
        twists.push(pose.log()?);
    }

    let logits = initial_logits(frames.len(), w * h, init, config.seed)?;
    let mut state =
        TrainState { logits, twists, steps: 0, history: Vec::with_capacity(config.iterations + 1), width: w, height: h };

    for step in 0..config.iterations {
        let ev = evaluate_objective(frames, k, &config.weights, &config.options, &state.logits, &state.twists, config.bidirectional)
            .map_err(|e| diverged(step, e))?;
        if !ev.trace.total.is_finite() {
            return Err(Error::Divergence {
                step,
                message: format!("objective became non-finite: {}", ev.trace.total),
            });
        }
        state.history.push(LossTrace { step, ..ev.trace });

        for (field, grads) in state.logits.iter_mut().zip(&ev.grad_logits) {
            for (x, g) in field.iter_mut().zip(grads) {
                *x -= config.step_size * g;
                if !x.is_finite() {
                    return Err(Error::Divergence {
                        step: step + 1,
                        message: "a depth logit became non-finite".into(),
                    });
                }
            }
        }
        if !frozen {
            for (twist, g) in state.twists.iter_mut().zip(&ev.grad_twists) {
                let updated = PoseSE3::exp(&(-config.pose_step_size * g)).compose(&PoseSE3::exp(twist));
                *twist = updated.log().map_err(|e| diverged(step + 1, e))?;
            }
        }
        state.steps = step + 1;
    }

    let last = evaluate_objective(
        frames,
        k,
        &config.weights,
        &config.options.forward_only(),
        &state.logits,
        &state.twists,
        config.bidirectional,
    )
    .map_err(|e| diverged(state.steps, e))?;
    state.history.push(LossTrace { step: state.steps, ..last.trace });
    Ok(state)
}

fn diverged(step: usize, source: Error) -> Error {
    match source {
        // Setup problems at step 0 are reported unchanged.
        e if step == 0 => e,
        e => Error::Divergence { step, message: format!("objective evaluation failed: {e}") },
    }
}

fn initial_logits(n_frames: usize, n_px: usize, init: &DepthInit, seed: u64) -> Result<Vec<Vec<f64>>> {
    match init {
        DepthInit::Constant(depth) => {
            let logit = logit_from_depth(*depth);
            Ok(vec![vec![logit; n_px]; n_frames])
        }
        DepthInit::Randomized(depth) => {
            let base = logit_from_depth(*depth);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n_frames)
                .map(|_| (0..n_px).map(|_| base + rng.random_range(-0.5..0.5)).collect())
                .collect())
        }
        DepthInit::Maps(maps) => {
            if maps.len() != n_frames {
                return Err(Error::Config(format!("{} initial depth maps for {n_frames} frames", maps.len())));
            }
            let fallback = (DEPTH_MIN * DEPTH_MAX).sqrt();
            let mut fields = Vec::with_capacity(n_frames);
            for map in *maps {
                if map.width() * map.height() != n_px {
                    return Err(Error::Data("initial depth map has the wrong shape".into()));
                }
                let w = map.width();
                fields.push(
                    (0..n_px)
                        .map(|i| logit_from_depth(map.get(i % w, i / w).unwrap_or(fallback)))
                        .collect(),
                );
            }
            Ok(fields)
        }
    }
}

/// One objective evaluation over all adjacent pairs.
pub(crate) struct Evaluation {
    pub trace: LossTrace,
    pub grad_logits: Vec<Vec<f64>>,
    pub grad_twists: Vec<Twist>,
}

/// Sums the fused loss (and its gradients) over adjacent pairs, both
/// directions when `bidirectional`. Reverse-direction pose gradients are
/// mapped back into the forward pose's tangent.
pub(crate) fn evaluate_objective(
    frames: &[ImageGrid],
    k: &Intrinsics,
    weights: &LossWeights,
    options: &LossOptions,
    logits: &[Vec<f64>],
    twists: &[Twist],
    bidirectional: bool,
) -> Result<Evaluation> {
    let (w, h) = (k.width, k.height);
    let depths: Vec<DepthMap> = logits
        .iter()
        .map(|field| DepthMap::from_values(w, h, field.iter().copied().map(depth_from_logit).collect()))
        .collect::<Result<_>>()?;
    let derivs: Vec<Vec<f64>> =
        logits.iter().map(|field| field.iter().copied().map(depth_from_logit_derivative).collect()).collect();

    let mut trace = LossTrace { step: 0, total: 0.0, photometric: 0.0, smoothness: 0.0, geometry: 0.0 };
    let mut grad_logits: Vec<Vec<f64>> = logits.iter().map(|f| vec![0.0; f.len()]).collect();
    let mut grad_twists = vec![Twist::zeros(); twists.len()];

    for (pair, twist) in twists.iter().enumerate() {
        let (a, b) = (pair, pair + 1);
        let pose_ab = PoseSE3::exp(twist);

        let forward = total_loss(
            &LossInputs {
                image_a: &frames[a],
                image_b: &frames[b],
                depth_a: &depths[a],
                depth_b: &depths[b],
                pose_ab: &pose_ab,
                intrinsics: k,
            },
            weights,
            options,
        )?;
        accumulate(&mut trace, &forward);
        add_logit_grads(&mut grad_logits[a], &forward.grad_depth_a, &derivs[a]);
        add_logit_grads(&mut grad_logits[b], &forward.grad_depth_b, &derivs[b]);
        grad_twists[pair] += forward.grad_twist;

        if bidirectional {
            let pose_ba = pose_ab.inverse();
            let reverse = total_loss(
                &LossInputs {
                    image_a: &frames[b],
                    image_b: &frames[a],
                    depth_a: &depths[b],
                    depth_b: &depths[a],
                    pose_ab: &pose_ba,
                    intrinsics: k,
                },
                weights,
                options,
            )?;
            accumulate(&mut trace, &reverse);
            add_logit_grads(&mut grad_logits[b], &reverse.grad_depth_a, &derivs[b]);
            add_logit_grads(&mut grad_logits[a], &reverse.grad_depth_b, &derivs[a]);
            // A left perturbation xi of the forward pose P perturbs the
            // reverse pose Q = P^-1 by exp(-Ad_Q xi) on the left, so the
            // reverse gradient pulls back through -Ad_Q^T.
            grad_twists[pair] -= pose_ba.adjoint().transpose() * reverse.grad_twist;
        }
    }

    Ok(Evaluation { trace, grad_logits, grad_twists })
}

fn accumulate(trace: &mut LossTrace, bundle: &crate::losses::LossBundle) {
    trace.total += bundle.total;
    trace.photometric += bundle.photometric;
    trace.smoothness += bundle.smoothness;
    trace.geometry += bundle.geometry;
}

fn add_logit_grads(target: &mut [f64], grad_depth: &[f64], deriv: &[f64]) {
    for ((t, g), d) in target.iter_mut().zip(grad_depth).zip(deriv) {
        *t += g * d;
    }
}
