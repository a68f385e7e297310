//! Illumination corruptions: low light, overexposure and lens flare.

use serde::{Deserialize, Serialize};

use super::NoiseModel;
use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::rng::RngStream;

/// Adds shot/read noise to an already scaled signal, in plane order then
/// row-major. Each sample's current value `l·x` sets its shot variance.
pub(crate) fn add_signal_noise(scaled: &mut LinearRgbImage, noise: &NoiseModel, rng: &mut RngStream) {
    if noise.is_zero() && !noise.literal_mean {
        return;
    }
    let read_var = noise.delta_r * noise.delta_r;
    for c in 0..3 {
        for v in scaled.plane_mut(c).iter_mut() {
            let var = read_var + noise.delta_s * v.max(0.0);
            let mean = if noise.literal_mean { *v } else { 0.0 };
            *v += rng.normal(mean, var.sqrt());
        }
    }
}

/// `y = l·x + n`, `n ~ N(0, δ_r² + δ_s·l·x)`. No clamping.
pub fn corrupt_relight(
    x: &LinearRgbImage,
    l: f64,
    noise: &NoiseModel,
    rng: &mut RngStream,
) -> Result<LinearRgbImage> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::param("l", format!("light factor must be > 0, got {l}")));
    }
    noise.validate()?;
    let mut y = if l == 1.0 { x.clone() } else { x.map(|v| l * v) };
    add_signal_noise(&mut y, noise, rng);
    Ok(y)
}

/// Shape of the procedural flare layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlareLayerParams {
    /// Peak value of the glow.
    pub strength: f64,
    /// Light source position as fractions of width and height.
    pub center: [f64; 2],
    /// Glow standard deviation as a fraction of the image diagonal.
    pub glow_sigma_frac: f64,
    /// Number of radial spikes.
    pub spikes: u32,
}

impl FlareLayerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0) || !self.strength.is_finite() {
            return Err(Error::param("flare.strength", "must be finite and >= 0"));
        }
        if !(self.glow_sigma_frac > 0.0) || !self.glow_sigma_frac.is_finite() {
            return Err(Error::param("flare.glow_sigma_frac", "must be > 0"));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("flare.center", "must be finite"));
        }
        Ok(())
    }
}

/// Gaussian glow plus thin radial spikes, tinted slightly warm. The spike
/// orientation offset is the only random draw.
pub fn procedural_flare(width: usize, height: usize, p: &FlareLayerParams, rng: &mut RngStream) -> Result<LinearRgbImage> {
    p.validate()?;
    let phase = rng.uniform_range(0.0, std::f64::consts::TAU);
    let cx = p.center[0] * (width.max(1) - 1) as f64;
    let cy = p.center[1] * (height.max(1) - 1) as f64;
    let diag = ((width * width + height * height) as f64).sqrt();
    let sigma = p.glow_sigma_frac * diag;
    let spike_len = 3.0 * sigma;
    let tint = [1.0, 0.92, 0.8];
    Ok(LinearRgbImage::from_fn(width, height, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let r2 = dx * dx + dy * dy;
        let glow = (-r2 / (2.0 * sigma * sigma)).exp();
        let mut spike = 0.0;
        if p.spikes > 0 && r2 > 0.0 {
            let r = r2.sqrt();
            let a = dy.atan2(dx) - phase;
            let sector = std::f64::consts::TAU / p.spikes as f64;
            let off = (a.rem_euclid(sector) - 0.5 * sector).abs();
            let perp = r * (0.5 * sector - off).sin().abs();
            let width_px = 1.0_f64;
            spike = (width_px - perp).max(0.0) * (1.0 - r / spike_len).max(0.0) * 0.5;
        }
        let v = p.strength * (glow + spike);
        tint.map(|t| t * v)
    }))
}

/// `y = x + F + N(0, σ²)` with `σ² = sigma2_scale · χ²₁` drawn once.
pub fn corrupt_flare(
    x: &LinearRgbImage,
    flare: &LinearRgbImage,
    sigma2_scale: f64,
    rng: &mut RngStream,
) -> Result<LinearRgbImage> {
    flare.check_dims(x.width(), x.height(), "flare layer")?;
    if !(sigma2_scale >= 0.0) || !sigma2_scale.is_finite() {
        return Err(Error::param("sigma2_scale", "must be finite and >= 0"));
    }
    let sigma2 = sigma2_scale * rng.chi_square_1();
    let std = sigma2.sqrt();
    let mut y = x.clone();
    for c in 0..3 {
        let f = flare.plane(c);
        for (v, fv) in y.plane_mut(c).iter_mut().zip(f) {
            *v += fv;
            if std > 0.0 {
                *v += std * rng.standard_normal();
            }
        }
    }
    Ok(y)
}

/// `y = l·x + F + x_n`, noise as in [`corrupt_relight`] with the shot term
/// driven by `l·x`.
pub fn corrupt_low_flare(
    x: &LinearRgbImage,
    l: f64,
    flare: &LinearRgbImage,
    noise: &NoiseModel,
    rng: &mut RngStream,
) -> Result<LinearRgbImage> {
    flare.check_dims(x.width(), x.height(), "flare layer")?;
    let mut y = corrupt_relight(x, l, noise, rng)?;
    for c in 0..3 {
        for (v, fv) in y.plane_mut(c).iter_mut().zip(flare.plane(c)) {
            *v += fv;
        }
    }
    Ok(y)
}
