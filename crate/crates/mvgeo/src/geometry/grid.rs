use nalgebra::Vector3;

use crate::error::{Error, Result};

use super::depth_param::{DEPTH_MAX, DEPTH_MIN};

/// Value and partial derivatives of a bilinear lookup at sub-pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BilinearSample {
    pub value: f64,
    /// d(value)/dx at the sample point.
    pub ddx: f64,
    /// d(value)/dy at the sample point.
    pub ddy: f64,
}

/// The four-neighbour footprint of a bilinear lookup.
///
/// A lookup is valid only when all four surrounding integer pixels lie inside
/// the grid, so coordinates that land exactly on the right or bottom border
/// are rejected rather than clamped.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BilinearFootprint {
    pub x0: usize,
    pub y0: usize,
    /// Fractional position inside the cell, in [0, 1).
    pub ax: f64,
    pub ay: f64,
}

impl BilinearFootprint {
    pub fn locate(x: f64, y: f64, width: usize, height: usize) -> Option<Self> {
        if !(x.is_finite() && y.is_finite()) || x < 0.0 || y < 0.0 {
            return None;
        }
        let x0 = x.floor();
        let y0 = y.floor();
        if x0 + 1.0 > (width - 1) as f64 || y0 + 1.0 > (height - 1) as f64 {
            return None;
        }
        Some(BilinearFootprint { x0: x0 as usize, y0: y0 as usize, ax: x - x0, ay: y - y0 })
    }

    /// Interpolation weights for (x0,y0), (x0+1,y0), (x0,y0+1), (x0+1,y0+1).
    pub fn weights(&self) -> [f64; 4] {
        let (ax, ay) = (self.ax, self.ay);
        [(1.0 - ax) * (1.0 - ay), ax * (1.0 - ay), (1.0 - ax) * ay, ax * ay]
    }

    pub fn interpolate(&self, v00: f64, v10: f64, v01: f64, v11: f64) -> BilinearSample {
        let (ax, ay) = (self.ax, self.ay);
        let value = (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11);
        let ddx = (1.0 - ay) * (v10 - v00) + ay * (v11 - v01);
        let ddy = (1.0 - ax) * (v01 - v00) + ax * (v11 - v10);
        BilinearSample { value, ddx, ddy }
    }
}

/// Dense H x W image with 1 or 3 channels, values in [0, 1], row-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Data(format!("image must have 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Data(format!(
                "image buffer has {} values, expected {}x{}x{} = {}",
                data.len(),
                width,
                height,
                channels,
                width * height * channels
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(Error::Data(format!("image values must lie in [0, 1], found {bad}")));
        }
        Ok(ImageGrid { width, height, channels, data })
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image by evaluating `f(u, v, channel)`; values are clamped to [0, 1].
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for v in 0..height {
            for u in 0..width {
                for c in 0..channels {
                    data.push(f(u, v, c).clamp(0.0, 1.0));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize, c: usize) -> f64 {
        self.data[(v * self.width + u) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, c: usize, value: f64) {
        self.data[(v * self.width + u) * self.channels + c] = value;
    }

    /// Mean absolute difference over channels at one pixel of two images.
    #[inline]
    pub fn pixel_l1(&self, other: &ImageGrid, u: usize, v: usize) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.channels {
            acc += (self.get(u, v, c) - other.get(u, v, c)).abs();
        }
        acc / self.channels as f64
    }

    /// Bilinear lookup of one channel; `None` when any of the four
    /// surrounding pixels falls outside the image.
    pub fn sample_channel(&self, c: usize, x: f64, y: f64) -> Option<BilinearSample> {
        let fp = BilinearFootprint::locate(x, y, self.width, self.height)?;
        let (x0, y0) = (fp.x0, fp.y0);
        Some(fp.interpolate(
            self.get(x0, y0, c),
            self.get(x0 + 1, y0, c),
            self.get(x0, y0 + 1, c),
            self.get(x0 + 1, y0 + 1, c),
        ))
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

/// Dense per-pixel depth with an explicit validity mask.
///
/// Valid entries are clamped into the supported depth range
/// [`DEPTH_MIN`], [`DEPTH_MAX`] on construction; invalid entries hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != width * height || valid.len() != width * height {
            return Err(Error::Data(format!(
                "depth buffers have {} values / {} flags, expected {}x{} = {}",
                values.len(),
                valid.len(),
                width,
                height,
                width * height
            )));
        }
        let mut clamped = values;
        for (v, ok) in clamped.iter_mut().zip(&valid) {
            if *ok {
                if !v.is_finite() {
                    return Err(Error::Data(format!("valid depth entry is not finite: {v}")));
                }
                *v = v.clamp(DEPTH_MIN, DEPTH_MAX);
            } else {
                *v = 0.0;
            }
        }
        Ok(DepthMap { width, height, values: clamped, valid })
    }

    /// All-valid map from raw values.
    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(width, height, values, vec![true; n])
    }

    pub fn constant(width: usize, height: usize, depth: f64) -> Result<Self> {
        Self::from_values(width, height, vec![depth; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[v * self.width + u]
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let i = v * self.width + u;
        self.valid[i].then(|| self.values[i])
    }

    #[inline]
    pub fn value_unchecked(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }

    pub fn valid_fraction(&self) -> f64 {
        if self.valid.is_empty() {
            return 0.0;
        }
        self.valid.iter().filter(|b| **b).count() as f64 / self.valid.len() as f64
    }

    /// Multiplies every valid depth by `s` (result re-clamped into range).
    pub fn scaled(&self, s: f64) -> Result<DepthMap> {
        let values = self
            .values
            .iter()
            .zip(&self.valid)
            .map(|(v, ok)| if *ok { v * s } else { 0.0 })
            .collect();
        DepthMap::new(self.width, self.height, values, self.valid.clone())
    }

    /// Bilinear lookup; valid only when all four surrounding pixels are
    /// inside the map and individually valid, keeping interpolated depth
    /// conservative near missing data.
    pub fn sample(&self, x: f64, y: f64) -> Option<BilinearSample> {
        let fp = BilinearFootprint::locate(x, y, self.width, self.height)?;
        let (x0, y0) = (fp.x0, fp.y0);
        if !(self.is_valid(x0, y0)
            && self.is_valid(x0 + 1, y0)
            && self.is_valid(x0, y0 + 1)
            && self.is_valid(x0 + 1, y0 + 1))
        {
            return None;
        }
        Some(fp.interpolate(
            self.value_unchecked(x0, y0),
            self.value_unchecked(x0 + 1, y0),
            self.value_unchecked(x0, y0 + 1),
            self.value_unchecked(x0 + 1, y0 + 1),
        ))
    }

    /// Bilinear lookup of `depth / divisor`, with the same validity rules as
    /// [`DepthMap::sample`]. Dividing each tap before interpolating keeps the
    /// result exactly invariant to a joint scaling of this map and `divisor`.
    pub fn sample_over(&self, x: f64, y: f64, divisor: f64) -> Option<f64> {
        let fp = BilinearFootprint::locate(x, y, self.width, self.height)?;
        let (x0, y0) = (fp.x0, fp.y0);
        if !(self.is_valid(x0, y0)
            && self.is_valid(x0 + 1, y0)
            && self.is_valid(x0, y0 + 1)
            && self.is_valid(x0 + 1, y0 + 1))
        {
            return None;
        }
        Some(
            fp.interpolate(
                self.value_unchecked(x0, y0) / divisor,
                self.value_unchecked(x0 + 1, y0) / divisor,
                self.value_unchecked(x0, y0 + 1) / divisor,
                self.value_unchecked(x0 + 1, y0 + 1) / divisor,
            )
            .value,
        )
    }

    pub fn same_shape(&self, other: &DepthMap) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Boolean per-pixel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl PixelMask {
    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        PixelMask { width, height, data: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.data[v * self.width + u] = value;
    }

    #[inline]
    pub fn at(&self, index: usize) -> bool {
        self.data[index]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn fraction(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.count() as f64 / self.data.len() as f64
    }

    /// Pixel-wise AND with another mask of the same shape.
    pub fn intersect(&self, other: &PixelMask) -> PixelMask {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect();
        PixelMask { width: self.width, height: self.height, data }
    }
}

/// Unordered set of 3-D points with optional per-point RGB colors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub colors: Option<Vec<[f64; 3]>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies `p -> s * R * p + t` to every point.
    pub fn transformed(&self, scale: f64, rotation: &nalgebra::Matrix3<f64>, translation: &Vector3<f64>) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| scale * (rotation * p) + translation).collect(),
            colors: self.colors.clone(),
        }
    }
}
