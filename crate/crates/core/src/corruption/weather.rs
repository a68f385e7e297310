//! Fog, rain and snow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::rng::RngStream;

/// Relative scene depth, `d >= 0`, one value per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "depth map has {} samples, expected {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|d| !(*d >= 0.0) || d.is_nan()) {
            return Err(Error::param("depth", format!("negative or NaN depth at index {i}")));
        }
        Ok(Self { width, height, data })
    }

    pub fn constant(width: usize, height: usize, d: f64) -> Result<Self> {
        Self::new(width, height, vec![d; width * height])
    }

    /// Ground-plane stand-in: depth falls linearly from 1 at the top row to
    /// 0 at the bottom row.
    pub fn procedural(width: usize, height: usize) -> Self {
        let denom = (height.max(2) - 1) as f64;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let d = (height - 1 - y) as f64 / denom;
            data.extend(std::iter::repeat(d).take(width));
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

fn check_fog(x: &LinearRgbImage, depth: &DepthMap, a: f64, beta: f64) -> Result<()> {
    x.check_dims(depth.width, depth.height, "depth map")
        .map_err(|_| {
            Error::DimensionMismatch(format!(
                "depth map is {}x{}, image is {}x{}",
                depth.width,
                depth.height,
                x.width(),
                x.height()
            ))
        })?;
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::param("A", format!("atmospheric light must lie in [0, 1], got {a}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

/// Koschmieder: `t = exp(-β·d)`, `y = x·t + A·(1 − t)`.
pub fn corrupt_fog(x: &LinearRgbImage, depth: &DepthMap, a: f64, beta: f64) -> Result<LinearRgbImage> {
    check_fog(x, depth, a, beta)?;
    Ok(fog_unchecked(x, depth, a, beta))
}

fn fog_unchecked(x: &LinearRgbImage, depth: &DepthMap, a: f64, beta: f64) -> LinearRgbImage {
    if beta == 0.0 {
        return x.clone();
    }
    let t: Vec<f64> = depth.data.iter().map(|d| (-beta * d).exp()).collect();
    let mut y = x.clone();
    for c in 0..3 {
        for (v, ti) in y.plane_mut(c).iter_mut().zip(&t) {
            *v = *v * ti + a * (1.0 - ti);
        }
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainStreaks {
    pub count: u32,
    /// Streak length in pixels.
    pub length: f64,
    /// Mean direction in radians from vertical.
    pub angle: f64,
    /// Per-streak angle jitter half-width in radians.
    pub angle_jitter: f64,
    /// Streak width in pixels.
    pub width: f64,
    /// Peak additive value of a streak.
    pub intensity: f64,
}

impl RainStreaks {
    pub fn none() -> Self {
        Self {
            count: 0,
            length: 10.0,
            angle: 0.0,
            angle_jitter: 0.0,
            width: 1.0,
            intensity: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.length, self.angle, self.angle_jitter, self.width, self.intensity]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("rain", "parameters must be finite"));
        }
        if self.intensity < 0.0 {
            return Err(Error::param("rain.intensity", "must be >= 0"));
        }
        if self.length < 0.0 || self.width <= 0.0 || self.angle_jitter < 0.0 {
            return Err(Error::param("rain", "length, width and jitter must be non-negative (width > 0)"));
        }
        Ok(())
    }
}

fn segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (ax + t * dx, ay + t * dy);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

/// Sum of anti-aliased streak segments, one plane shared by all channels.
/// Each streak draws centre x, centre y and angle jitter, in that order.
pub fn rain_layer(width: usize, height: usize, s: &RainStreaks, rng: &mut RngStream) -> Result<Vec<f64>> {
    s.validate()?;
    let mut layer = vec![0.0; width * height];
    if layer.is_empty() {
        return Ok(layer);
    }
    let half_w = 0.5 * s.width;
    for _ in 0..s.count {
        let cx = rng.uniform_range(0.0, width as f64);
        let cy = rng.uniform_range(0.0, height as f64);
        let a = s.angle + rng.uniform_range(-s.angle_jitter, s.angle_jitter);
        let (dx, dy) = (0.5 * s.length * a.sin(), 0.5 * s.length * a.cos());
        let (ax, ay, bx, by) = (cx - dx, cy - dy, cx + dx, cy + dy);
        let reach = half_w + 1.0;
        let x0 = (ax.min(bx) - reach).floor().max(0.0) as usize;
        let y0 = (ay.min(by) - reach).floor().max(0.0) as usize;
        let x1 = ((ax.max(bx) + reach).ceil().max(0.0) as usize).min(width.saturating_sub(1));
        let y1 = ((ay.max(by) + reach).ceil().max(0.0) as usize).min(height.saturating_sub(1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = segment_distance(x as f64, y as f64, ax, ay, bx, by);
                let cov = (half_w + 0.5 - d).clamp(0.0, 1.0);
                if cov > 0.0 {
                    layer[y * width + x] += s.intensity * cov;
                }
            }
        }
    }
    Ok(layer)
}

fn add_layer(x: &LinearRgbImage, layer: &[f64]) -> LinearRgbImage {
    let mut y = x.clone();
    for c in 0..3 {
        for (v, r) in y.plane_mut(c).iter_mut().zip(layer) {
            *v += r;
        }
    }
    y
}

/// `y = x + Σ R_i`.
pub fn corrupt_rain(x: &LinearRgbImage, streaks: &RainStreaks, rng: &mut RngStream) -> Result<LinearRgbImage> {
    if streaks.count == 0 {
        streaks.validate()?;
        return Ok(x.clone());
    }
    let layer = rain_layer(x.width(), x.height(), streaks, rng)?;
    Ok(add_layer(x, &layer))
}

/// `y = (x + Σ R_i)·t + A·(1 − t)`: rain first, then fog.
pub fn corrupt_rain_fog(
    x: &LinearRgbImage,
    streaks: &RainStreaks,
    depth: &DepthMap,
    a: f64,
    beta: f64,
    rng: &mut RngStream,
) -> Result<LinearRgbImage> {
    check_fog(x, depth, a, beta)?;
    let rained = corrupt_rain(x, streaks, rng)?;
    Ok(fog_unchecked(&rained, depth, a, beta))
}

/// Snow mask `z ∈ [0, 1]` and flake brightness `S >= 0`, per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct SnowLayer {
    width: usize,
    height: usize,
    mask: Vec<f64>,
    flakes: Vec<f64>,
}

impl SnowLayer {
    pub fn new(width: usize, height: usize, mask: Vec<f64>, flakes: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if mask.len() != n || flakes.len() != n {
            return Err(Error::DimensionMismatch(format!("snow layer planes must have {width}x{height} samples")));
        }
        if mask.iter().any(|z| !(0.0..=1.0).contains(z)) {
            return Err(Error::param("snow.mask", "values must lie in [0, 1]"));
        }
        if flakes.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::param("snow.flakes", "values must be finite and >= 0"));
        }
        Ok(Self {
            width,
            height,
            mask,
            flakes,
        })
    }

    pub fn uniform(width: usize, height: usize, z: f64, s: f64) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![z; n], vec![s; n])
    }

    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    pub fn flakes(&self) -> &[f64] {
        &self.flakes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnowParams {
    /// Value-noise cell size in pixels.
    pub blotch_scale: f64,
    /// Fraction of the frame covered by blotches.
    pub coverage: f64,
    /// Mask value inside a blotch.
    pub blotch_opacity: f64,
    pub flakes: u32,
    pub flake_radius: f64,
    /// Constant snow brightness `S`.
    pub brightness: f64,
}

impl SnowParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.blotch_scale > 0.0
            && (0.0..=1.0).contains(&self.coverage)
            && (0.0..=1.0).contains(&self.blotch_opacity)
            && self.flake_radius > 0.0
            && self.brightness >= 0.0
            && self.brightness.is_finite()
            && self.blotch_scale.is_finite()
            && self.flake_radius.is_finite();
        if !ok {
            return Err(Error::param("snow", "invalid snow parameters"));
        }
        Ok(())
    }
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Value-noise blotches combined with disk flakes,
/// `z = 1 − (1 − z_blotch)(1 − z_flake)`.
pub fn procedural_snow(width: usize, height: usize, p: &SnowParams, rng: &mut RngStream) -> Result<SnowLayer> {
    p.validate()?;
    let gw = (width as f64 / p.blotch_scale).ceil() as usize + 2;
    let gh = (height as f64 / p.blotch_scale).ceil() as usize + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.uniform()).collect();
    let threshold = 1.0 - p.coverage;
    let mut mask = vec![0.0; width * height];
    for y in 0..height {
        let gy = y as f64 / p.blotch_scale;
        let (iy, fy) = (gy.floor() as usize, gy.fract());
        let sy = fy * fy * (3.0 - 2.0 * fy);
        for x in 0..width {
            let gx = x as f64 / p.blotch_scale;
            let (ix, fx) = (gx.floor() as usize, gx.fract());
            let sx = fx * fx * (3.0 - 2.0 * fx);
            let g = |i: usize, j: usize| grid[j * gw + i];
            let top = g(ix, iy) * (1.0 - sx) + g(ix + 1, iy) * sx;
            let bot = g(ix, iy + 1) * (1.0 - sx) + g(ix + 1, iy + 1) * sx;
            let n = top * (1.0 - sy) + bot * sy;
            mask[y * width + x] = p.blotch_opacity * smoothstep(threshold - 0.1, threshold + 0.1, n);
        }
    }
    let mut flake = vec![0.0; width * height];
    let reach = p.flake_radius + 1.0;
    let n_flakes = if flake.is_empty() { 0 } else { p.flakes };
    for _ in 0..n_flakes {
        let cx = rng.uniform_range(0.0, width as f64);
        let cy = rng.uniform_range(0.0, height as f64);
        let x0 = (cx - reach).floor().max(0.0) as usize;
        let y0 = (cy - reach).floor().max(0.0) as usize;
        let x1 = ((cx + reach).ceil() as usize).min(width.saturating_sub(1));
        let y1 = ((cy + reach).ceil() as usize).min(height.saturating_sub(1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                let cov = (p.flake_radius + 0.5 - d).clamp(0.0, 1.0);
                let f = &mut flake[y * width + x];
                *f = f64::max(*f, cov);
            }
        }
    }
    for (z, f) in mask.iter_mut().zip(&flake) {
        *z = 1.0 - (1.0 - *z) * (1.0 - f);
    }
    let flakes = vec![p.brightness; width * height];
    SnowLayer::new(width, height, mask, flakes)
}

/// `y = x·(1 − z) + z·S`.
pub fn corrupt_snow(x: &LinearRgbImage, snow: &SnowLayer) -> Result<LinearRgbImage> {
    x.check_dims(snow.width, snow.height, "snow layer")?;
    let mut y = x.clone();
    for c in 0..3 {
        for ((v, z), s) in y.plane_mut(c).iter_mut().zip(&snow.mask).zip(&snow.flakes) {
            if *z != 0.0 {
                *v = *v * (1.0 - z) + z * s;
            }
        }
    }
    Ok(y)
}
