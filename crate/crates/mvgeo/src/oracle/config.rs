//! Text configuration for synthetic scenes and camera paths.
//!
//! The grammar is the shared `key = value` format (one pair per line, `#`
//! comments). Scalar keys may appear once; `plane = nx ny nz offset seed` and
//! `patch = u0 v0 u1 v1 vx vy vz seed` may repeat. Unknown keys are rejected
//! so that typos cannot silently fall back to defaults.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Twist};
use crate::io::{parse_kv, parse_kv_str, KvEntry};
use crate::oracle::{PatchSpec, PlaneSpec, SceneSpec, SequenceSpec};

/// Everything `synth` needs: the scene, the camera path, and the step twist
/// the path was built from (kept for display).
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub scene: SceneSpec,
    pub sequence: SequenceSpec,
    pub step: Twist,
}

pub fn parse_synth_config(text: &str, source: &str) -> Result<SynthConfig> {
    build(parse_kv_str(text, source)?, source)
}

pub fn load_synth_config(path: &Path) -> Result<SynthConfig> {
    build(parse_kv(path)?, &path.display().to_string())
}

impl SynthConfig {
    /// Canonical `key = value` rendering of the fully resolved configuration.
    /// Parsing the result reproduces the same configuration, and two runs of
    /// the same input produce identical text.
    pub fn resolved_text(&self) -> String {
        let k = &self.sequence.intrinsics;
        let s = &self.scene;
        let mut out = String::new();
        let _ = writeln!(out, "width = {}", k.width);
        let _ = writeln!(out, "height = {}", k.height);
        let _ = writeln!(out, "fx = {}", k.fx);
        let _ = writeln!(out, "fy = {}", k.fy);
        let _ = writeln!(out, "cx = {}", k.cx);
        let _ = writeln!(out, "cy = {}", k.cy);
        let _ = writeln!(out, "frames = {}", self.sequence.n_frames());
        let st = &self.step;
        let _ = writeln!(out, "step = {} {} {} {} {} {}", st[0], st[1], st[2], st[3], st[4], st[5]);
        let _ = writeln!(out, "background = {}", s.background);
        let _ = writeln!(out, "channels = {}", s.channels);
        let _ = writeln!(out, "seed = {}", s.seed);
        let _ = writeln!(out, "noise_sigma = {}", s.noise_sigma);
        let _ = writeln!(out, "texture_scale = {}", s.texture_scale);
        for p in &s.planes {
            let _ = writeln!(out, "plane = {} {} {} {} {}", p.normal.x, p.normal.y, p.normal.z, p.offset, p.texture_seed);
        }
        for p in &s.patches {
            let _ = writeln!(
                out,
                "patch = {} {} {} {} {} {} {} {}",
                p.rect[0], p.rect[1], p.rect[2], p.rect[3], p.velocity.x, p.velocity.y, p.velocity.z, p.texture_seed
            );
        }
        out
    }
}

/// One scalar key that may be set at most once.
struct Slot<T> {
    key: &'static str,
    value: Option<T>,
}

impl<T> Slot<T> {
    fn new(key: &'static str) -> Self {
        Slot { key, value: None }
    }

    fn set(&mut self, entry: &KvEntry, source: &str, parsed: T) -> Result<()> {
        if self.value.is_some() {
            return Err(Error::Config(format!("{source}:{}: duplicate key `{}`", entry.line, self.key)));
        }
        self.value = Some(parsed);
        Ok(())
    }
}

fn scalar<T: FromStr>(entry: &KvEntry, source: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    entry.value.parse().map_err(|e| Error::Parse {
        location: format!("{source}:{}", entry.line),
        message: format!("bad value for `{}`: {e}", entry.key),
    })
}

fn fields<const N: usize>(entry: &KvEntry, source: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = entry.value.split_whitespace().collect();
    if parts.len() != N {
        return Err(Error::Parse {
            location: format!("{source}:{}", entry.line),
            message: format!("`{}` needs {N} fields, got {}", entry.key, parts.len()),
        });
    }
    let mut out = [0.0; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|e| Error::Parse {
            location: format!("{source}:{}", entry.line),
            message: format!("bad number {part:?} in `{}`: {e}", entry.key),
        })?;
    }
    Ok(out)
}

fn build(entries: Vec<KvEntry>, source: &str) -> Result<SynthConfig> {
    let mut width = Slot::<usize>::new("width");
    let mut height = Slot::<usize>::new("height");
    let mut focal = Slot::<f64>::new("focal");
    let mut fx = Slot::<f64>::new("fx");
    let mut fy = Slot::<f64>::new("fy");
    let mut cx = Slot::<f64>::new("cx");
    let mut cy = Slot::<f64>::new("cy");
    let mut frames = Slot::<usize>::new("frames");
    let mut step = Slot::<[f64; 6]>::new("step");
    let mut background = Slot::<f64>::new("background");
    let mut channels = Slot::<usize>::new("channels");
    let mut seed = Slot::<u64>::new("seed");
    let mut noise_sigma = Slot::<f64>::new("noise_sigma");
    let mut texture_scale = Slot::<f64>::new("texture_scale");
    let mut planes = Vec::new();
    let mut patches = Vec::new();

    for entry in &entries {
        match entry.key.as_str() {
            "width" => width.set(entry, source, scalar(entry, source)?)?,
            "height" => height.set(entry, source, scalar(entry, source)?)?,
            "focal" => focal.set(entry, source, scalar(entry, source)?)?,
            "fx" => fx.set(entry, source, scalar(entry, source)?)?,
            "fy" => fy.set(entry, source, scalar(entry, source)?)?,
            "cx" => cx.set(entry, source, scalar(entry, source)?)?,
            "cy" => cy.set(entry, source, scalar(entry, source)?)?,
            "frames" => frames.set(entry, source, scalar(entry, source)?)?,
            "step" => step.set(entry, source, fields::<6>(entry, source)?)?,
            "background" => background.set(entry, source, scalar(entry, source)?)?,
            "channels" => channels.set(entry, source, scalar(entry, source)?)?,
            "seed" => seed.set(entry, source, scalar(entry, source)?)?,
            "noise_sigma" => noise_sigma.set(entry, source, scalar(entry, source)?)?,
            "texture_scale" => texture_scale.set(entry, source, scalar(entry, source)?)?,
            "plane" => {
                let f = fields::<5>(entry, source)?;
                planes.push(PlaneSpec {
                    normal: Vector3::new(f[0], f[1], f[2]),
                    offset: f[3],
                    texture_seed: seed_field(f[4], entry, source)?,
                });
            }
            "patch" => {
                let f = fields::<8>(entry, source)?;
                patches.push(PatchSpec {
                    rect: [f[0], f[1], f[2], f[3]],
                    velocity: Vector3::new(f[4], f[5], f[6]),
                    texture_seed: seed_field(f[7], entry, source)?,
                });
            }
            other => {
                return Err(Error::Config(format!("{source}:{}: unknown key `{other}`", entry.line)));
            }
        }
    }

    let width = width.value.unwrap_or(64);
    let height = height.value.unwrap_or(64);
    let focal = focal.value.unwrap_or(width.max(height) as f64);
    let intrinsics = Intrinsics::new(
        fx.value.unwrap_or(focal),
        fy.value.unwrap_or(focal),
        cx.value.unwrap_or(width as f64 / 2.0),
        cy.value.unwrap_or(height as f64 / 2.0),
        width,
        height,
    )?;

    let scene = SceneSpec {
        planes,
        patches,
        background: background.value.unwrap_or(10.0),
        channels: channels.value.unwrap_or(3),
        noise_sigma: noise_sigma.value.unwrap_or(0.0),
        texture_scale: texture_scale.value.unwrap_or(1.0),
        seed: seed.value.unwrap_or(0),
    };
    scene.validate()?;

    let step = Twist::from_column_slice(&step.value.unwrap_or([0.0; 6]));
    let sequence = SequenceSpec::constant_velocity(frames.value.unwrap_or(3), &step, intrinsics)?;
    Ok(SynthConfig { scene, sequence, step })
}

fn seed_field(raw: f64, entry: &KvEntry, source: &str) -> Result<u64> {
    if raw < 0.0 || raw.fract() != 0.0 || raw > u64::MAX as f64 {
        return Err(Error::Parse {
            location: format!("{source}:{}", entry.line),
            message: format!("texture seed in `{}` must be a non-negative integer, got {raw}", entry.key),
        });
    }
    Ok(raw as u64)
}
