//! Synthetic plane-world scenes with exact depths, poses, and view-consistent
//! color — the independent reference data the rest of the crate is tested
//! against.
//!
//! A scene is a set of textured infinite planes, a fronto-parallel backdrop
//! that guarantees forward rays always hit something, and optional moving
//! patches: plane segments that translate rigidly from frame to frame.
//! Depth is the exact ray parameter of the closest intersection and color is a
//! smooth function of the 3D surface point, so two renders of a static scene
//! are photometrically consistent up to resampling alone.

pub mod config;
mod texture;

pub use config::{parse_synth_config, SynthConfig};
pub use texture::Texture;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, ImageGrid, Intrinsics, PoseSE3, Twist, Z_EPS};
use crate::util::median_of;

/// Closest scene depth the renderer accepts.
pub const SCENE_DEPTH_MIN: f64 = 0.5;
/// Farthest scene depth the renderer accepts.
pub const SCENE_DEPTH_MAX: f64 = 50.0;
/// Per-frame rotation cap for sequences, in degrees.
pub const MAX_FRAME_ROTATION_DEG: f64 = 10.0;
/// Per-frame translation cap as a fraction of the median scene depth.
pub const MAX_FRAME_TRANSLATION_FRACTION: f64 = 0.1;

/// Infinite textured plane `normal · X = offset` in world coordinates.
#[derive(Debug, Clone)]
pub struct PlaneSpec {
    /// Surface normal; any non-zero length.
    pub normal: Vector3<f64>,
    pub offset: f64,
    pub texture_seed: u64,
}

/// A rigidly translating segment of whichever surface it covers in frame 0.
#[derive(Debug, Clone)]
pub struct PatchSpec {
    /// Pixel rectangle `[u_min, v_min, u_max, v_max]` in frame 0 selecting the
    /// moving segment.
    pub rect: [f64; 4],
    /// World-space displacement the segment accrues per frame.
    pub velocity: Vector3<f64>,
    pub texture_seed: u64,
}

/// Full scene description. All fields are public so tests can build scenes
/// directly; [`SceneSpec::flat`] gives the minimal valid scene.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub planes: Vec<PlaneSpec>,
    pub patches: Vec<PatchSpec>,
    /// Depth of the fronto-parallel backdrop plane `z = background` that backs
    /// every forward ray.
    pub background: f64,
    /// Image channels; 1 or 3.
    pub channels: usize,
    /// Std-dev of optional per-pixel Gaussian image noise; 0 keeps renders
    /// exactly view-consistent.
    pub noise_sigma: f64,
    /// Stretches the texture frequency band; 1.0 is the default band.
    pub texture_scale: f64,
    /// Seeds the backdrop texture and the noise stream.
    pub seed: u64,
}

impl SceneSpec {
    /// Backdrop-only scene: no extra planes, no moving patches, no noise.
    pub fn flat(background: f64, seed: u64) -> SceneSpec {
        SceneSpec {
            planes: Vec::new(),
            patches: Vec::new(),
            background,
            channels: 3,
            noise_sigma: 0.0,
            texture_scale: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::Config(format!("scene must have 1 or 3 channels, got {}", self.channels)));
        }
        if !(self.background.is_finite() && self.background > 0.0) {
            return Err(Error::Config(format!("backdrop depth must be positive, got {}", self.background)));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!("noise sigma must be non-negative, got {}", self.noise_sigma)));
        }
        if !(self.texture_scale.is_finite() && self.texture_scale > 0.0) {
            return Err(Error::Config(format!("texture scale must be positive, got {}", self.texture_scale)));
        }
        for (i, p) in self.planes.iter().enumerate() {
            if !(p.normal.norm() > 1e-9 && p.normal.iter().all(|c| c.is_finite()) && p.offset.is_finite()) {
                return Err(Error::Config(format!("plane {i} has a degenerate normal or offset")));
            }
        }
        for (i, p) in self.patches.iter().enumerate() {
            let [u0, v0, u1, v1] = p.rect;
            let finite = p.rect.iter().all(|c| c.is_finite()) && p.velocity.iter().all(|c| c.is_finite());
            if !finite || u0 >= u1 || v0 >= v1 {
                return Err(Error::Config(format!("patch {i} has a degenerate rectangle or velocity")));
            }
        }
        Ok(())
    }
}

/// Camera path for a rendered sequence: world-from-camera pose per frame plus
/// the shared intrinsics (which carry the image size).
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    pub poses: Vec<PoseSE3>,
    pub intrinsics: Intrinsics,
}

impl SequenceSpec {
    pub fn new(poses: Vec<PoseSE3>, intrinsics: Intrinsics) -> Result<SequenceSpec> {
        if poses.is_empty() {
            return Err(Error::Config("a sequence needs at least one pose".into()));
        }
        intrinsics.validate()?;
        Ok(SequenceSpec { poses, intrinsics })
    }

    /// Camera path starting at the identity and advancing by `exp(step)` each
    /// frame.
    pub fn constant_velocity(n_frames: usize, step: &Twist, intrinsics: Intrinsics) -> Result<SequenceSpec> {
        if n_frames == 0 {
            return Err(Error::Config("a sequence needs at least one frame".into()));
        }
        let stride = PoseSE3::exp(step);
        let mut poses = Vec::with_capacity(n_frames);
        poses.push(PoseSE3::identity());
        for t in 1..n_frames {
            poses.push(poses[t - 1].compose(&stride));
        }
        SequenceSpec::new(poses, intrinsics)
    }

    pub fn n_frames(&self) -> usize {
        self.poses.len()
    }

    /// Pose mapping frame-`a` camera coordinates into the frame-`b` camera.
    pub fn relative(&self, a: usize, b: usize) -> Result<PoseSE3> {
        let n = self.poses.len();
        if a >= n || b >= n {
            return Err(Error::Config(format!("relative({a}, {b}) out of range for {n} frames")));
        }
        Ok(self.poses[b].inverse().compose(&self.poses[a]))
    }

    /// Rejects camera steps large enough to break warp-based supervision:
    /// per-frame rotation must stay under 10 degrees and translation under 10%
    /// of the median scene depth.
    pub fn validate_motion(&self, median_depth: f64) -> Result<()> {
        let max_rot = MAX_FRAME_ROTATION_DEG.to_radians();
        let max_trans = MAX_FRAME_TRANSLATION_FRACTION * median_depth;
        for t in 1..self.poses.len() {
            let rel = self.poses[t].inverse().compose(&self.poses[t - 1]);
            let rot = rel.rotation_angle();
            let trans = rel.translation().norm();
            if rot >= max_rot {
                return Err(Error::Config(format!(
                    "rotation between frames {} and {t} is {:.2} deg, limit {MAX_FRAME_ROTATION_DEG} deg",
                    t - 1,
                    rot.to_degrees()
                )));
            }
            if trans >= max_trans {
                return Err(Error::Config(format!(
                    "translation between frames {} and {t} is {trans:.3}, limit {max_trans:.3} (10% of median depth {median_depth:.3})",
                    t - 1
                )));
            }
        }
        Ok(())
    }
}

/// Renders a single frame. The pose doubles as the reference frame for moving
/// patches, which sit at their frame-0 position.
pub fn render(scene: &SceneSpec, pose: &PoseSE3, k: &Intrinsics) -> Result<(ImageGrid, DepthMap)> {
    scene.validate()?;
    k.validate()?;
    let prepared = prepare(scene, pose, k)?;
    render_frame(&prepared, scene, pose, pose, k, 0)
}

/// Renders every frame of the sequence; moving patches advance by their
/// per-frame velocity. Fails if camera motion between consecutive frames is
/// too large relative to the scene (see [`SequenceSpec::validate_motion`]).
pub fn render_sequence(scene: &SceneSpec, seq: &SequenceSpec) -> Result<Vec<(ImageGrid, DepthMap, PoseSE3)>> {
    scene.validate()?;
    let k = &seq.intrinsics;
    k.validate()?;
    let pose0 = &seq.poses[0];
    let prepared = prepare(scene, pose0, k)?;

    let mut frames = Vec::with_capacity(seq.poses.len());
    let first = render_frame(&prepared, scene, pose0, pose0, k, 0)?;
    let mut depths: Vec<f64> = first.1.values().to_vec();
    seq.validate_motion(median_of(&mut depths))?;
    frames.push((first.0, first.1, pose0.clone()));

    for (t, pose) in seq.poses.iter().enumerate().skip(1) {
        let (img, depth) = render_frame(&prepared, scene, pose, pose0, k, t)?;
        frames.push((img, depth, pose.clone()));
    }
    Ok(frames)
}

struct PreparedSurface {
    normal: Vector3<f64>,
    offset: f64,
    texture: Texture,
}

struct PreparedPatch {
    rect: [f64; 4],
    velocity: Vector3<f64>,
    /// Host surface the segment was lifted from in frame 0.
    normal: Vector3<f64>,
    offset: f64,
    texture: Texture,
}

struct PreparedScene {
    /// Scene planes followed by the backdrop.
    surfaces: Vec<PreparedSurface>,
    patches: Vec<PreparedPatch>,
}

/// Builds textures and resolves each patch onto the surface its rectangle
/// center covers in frame 0.
fn prepare(scene: &SceneSpec, pose0: &PoseSE3, k: &Intrinsics) -> Result<PreparedScene> {
    let mut surfaces: Vec<PreparedSurface> = scene
        .planes
        .iter()
        .map(|p| PreparedSurface {
            normal: p.normal,
            offset: p.offset,
            texture: Texture::from_seed(p.texture_seed, scene.channels, scene.texture_scale),
        })
        .collect();
    surfaces.push(PreparedSurface {
        normal: Vector3::z(),
        offset: scene.background,
        texture: Texture::from_seed(scene.seed, scene.channels, scene.texture_scale),
    });

    let origin = *pose0.translation();
    let mut patches = Vec::with_capacity(scene.patches.len());
    for (i, patch) in scene.patches.iter().enumerate() {
        let center_u = 0.5 * (patch.rect[0] + patch.rect[2]);
        let center_v = 0.5 * (patch.rect[1] + patch.rect[3]);
        let dir = pose0.rotation() * camera_ray(k, center_u, center_v);
        let host = surfaces
            .iter()
            .filter_map(|s| intersect(&s.normal, s.offset, &origin, &dir).map(|t| (t, s)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or_else(|| {
                Error::Config(format!("patch {i}: center ray ({center_u}, {center_v}) misses every surface"))
            })?
            .1;
        patches.push(PreparedPatch {
            rect: patch.rect,
            velocity: patch.velocity,
            normal: host.normal,
            offset: host.offset,
            texture: Texture::from_seed(patch.texture_seed, scene.channels, scene.texture_scale),
        });
    }
    Ok(PreparedScene { surfaces, patches })
}

fn camera_ray(k: &Intrinsics, u: f64, v: f64) -> Vector3<f64> {
    Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0)
}

/// Ray parameter of `normal . (origin + s dir) = offset`, if the hit lies in
/// front of the origin.
fn intersect(normal: &Vector3<f64>, offset: f64, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    let denom = normal.dot(dir);
    if denom.abs() < 1e-12 {
        return None;
    }
    let s = (offset - normal.dot(origin)) / denom;
    (s > 1e-9).then_some(s)
}

fn render_frame(
    prepared: &PreparedScene,
    scene: &SceneSpec,
    pose: &PoseSE3,
    pose0: &PoseSE3,
    k: &Intrinsics,
    frame: usize,
) -> Result<(ImageGrid, DepthMap)> {
    let (w, h, c) = (k.width, k.height, scene.channels);
    let origin = *pose.translation();
    let rot0_t = pose0.rotation().transpose();
    let origin0 = *pose0.translation();

    let mut pixels = vec![0.0; w * h * c];
    let mut depths = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            let dir = pose.rotation() * camera_ray(k, u as f64, v as f64);

            // Closest hit; patches are tested first and planes only replace a
            // patch when strictly closer, so a patch sitting exactly on its
            // host surface (frame 0) wins the tie.
            let mut best: Option<(f64, &Texture, Vector3<f64>)> = None;
            for patch in &prepared.patches {
                let disp = patch.velocity * frame as f64;
                let offset_t = patch.offset + patch.normal.dot(&disp);
                let Some(s) = intersect(&patch.normal, offset_t, &origin, &dir) else {
                    continue;
                };
                if best.is_some_and(|(bs, _, _)| s >= bs) {
                    continue;
                }
                // Membership: the un-displaced point must project into the
                // patch rectangle through the frame-0 camera.
                let rest = origin + dir * s - disp;
                let cam0 = rot0_t * (rest - origin0);
                if cam0.z <= Z_EPS {
                    continue;
                }
                let pu = k.fx * cam0.x / cam0.z + k.cx;
                let pv = k.fy * cam0.y / cam0.z + k.cy;
                let [u0, v0, u1, v1] = patch.rect;
                if pu >= u0 && pu <= u1 && pv >= v0 && pv <= v1 {
                    best = Some((s, &patch.texture, rest));
                }
            }
            for surface in &prepared.surfaces {
                let Some(s) = intersect(&surface.normal, surface.offset, &origin, &dir) else {
                    continue;
                };
                if best.is_none_or(|(bs, _, _)| s < bs) {
                    best = Some((s, &surface.texture, origin + dir * s));
                }
            }

            let Some((s, texture, point)) = best else {
                return Err(Error::Config(format!("ray through pixel ({u}, {v}) of frame {frame} misses every surface")));
            };
            if !(SCENE_DEPTH_MIN..=SCENE_DEPTH_MAX).contains(&s) {
                return Err(Error::Config(format!(
                    "depth {s:.3} at pixel ({u}, {v}) of frame {frame} is outside [{SCENE_DEPTH_MIN}, {SCENE_DEPTH_MAX}]"
                )));
            }
            depths[v * w + u] = s;
            for ch in 0..c {
                pixels[(v * w + u) * c + ch] = texture.eval(&point, ch);
            }
        }
    }

    if scene.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(
            scene.seed ^ (frame as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03),
        );
        let normal = rand_distr::Normal::new(0.0, scene.noise_sigma)
            .map_err(|e| Error::Config(format!("bad noise sigma: {e}")))?;
        for px in &mut pixels {
            *px = (*px + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }

    let image = ImageGrid::new(w, h, c, pixels)?;
    let depth = DepthMap::from_values(w, h, depths)?;
    Ok((image, depth))
}
