//! Sensor noise, CMOS defects and the cross-sensor matrix stand-in.

use super::NoiseModel;
use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::isp::color::{mul_row, Matrix3};
use crate::raw::BayerImage;
use crate::rng::RngStream;

/// Half an LSB for a `bits`-bit quantizer, `1 / 2^(bits+1)`.
pub fn quantization_bound(bits: u32) -> f64 {
    0.5f64.powi(bits as i32 + 1)
}

fn check_bits(bits: Option<u32>) -> Result<()> {
    match bits {
        Some(b) if !(1..=52).contains(&b) => Err(Error::param("bits", format!("must lie in [1, 52], got {b}"))),
        _ => Ok(()),
    }
}

fn noise_plane(plane: &mut [f64], noise: &NoiseModel, q: Option<f64>, rng: &mut RngStream) {
    let read_var = noise.delta_r * noise.delta_r;
    let gaussian = !noise.is_zero() || noise.literal_mean;
    for v in plane.iter_mut() {
        let x = *v;
        if gaussian {
            let var = read_var + noise.delta_s * x.max(0.0);
            let mean = if noise.literal_mean { x } else { 0.0 };
            *v += rng.normal(mean, var.sqrt());
        }
        if let Some(q) = q {
            *v += rng.uniform_range(-q, q);
        }
    }
}

/// `y = x + x_n + x_quan`; `bits = None` disables quantization noise.
pub fn corrupt_sensor_noise(
    x: &LinearRgbImage,
    noise: &NoiseModel,
    bits: Option<u32>,
    rng: &mut RngStream,
) -> Result<LinearRgbImage> {
    noise.validate()?;
    check_bits(bits)?;
    let q = bits.map(quantization_bound);
    let mut y = x.clone();
    for c in 0..3 {
        noise_plane(y.plane_mut(c), noise, q, rng);
    }
    Ok(y)
}

/// Sensor noise on the mosaic before demosaicing; the result is clamped to
/// `[0, 1]` to stay a valid mosaic.
pub fn corrupt_sensor_noise_bayer(
    bayer: &BayerImage,
    noise: &NoiseModel,
    bits: Option<u32>,
    rng: &mut RngStream,
) -> Result<BayerImage> {
    noise.validate()?;
    check_bits(bits)?;
    let mut data = bayer.data().to_vec();
    noise_plane(&mut data, noise, bits.map(quantization_bound), rng);
    bayer.with_data_clamped(data)
}

fn check_cmos(height: usize, dead_rows: usize, rate: f64, hot_value: f64) -> Result<()> {
    if dead_rows > height {
        return Err(Error::param("dead_rows", format!("{dead_rows} dead rows exceed image height {height}")));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::param("hot_pixel_rate", format!("must lie in [0, 1], got {rate}")));
    }
    if !hot_value.is_finite() {
        return Err(Error::param("hot_value", "must be finite"));
    }
    Ok(())
}

/// Returns (hot pixel indices, dead rows). Hot pixels are drawn first, one
/// Bernoulli per pixel, then rows by partial Fisher–Yates.
fn cmos_defects(width: usize, height: usize, dead_rows: usize, rate: f64, rng: &mut RngStream) -> (Vec<usize>, Vec<usize>) {
    let mut hot = Vec::new();
    if rate > 0.0 {
        for i in 0..width * height {
            if rng.bernoulli(rate) {
                hot.push(i);
            }
        }
    }
    let mut rows: Vec<usize> = (0..height).collect();
    for i in 0..dead_rows {
        let j = rng.int_range(i as u64, (height - 1) as u64) as usize;
        rows.swap(i, j);
    }
    rows.truncate(dead_rows);
    (hot, rows)
}

/// Hot pixels set to `hot_value`, then `dead_rows` distinct rows zeroed.
pub fn corrupt_cmos_damage(
    x: &LinearRgbImage,
    dead_rows: usize,
    hot_pixel_rate: f64,
    hot_value: f64,
    rng: &mut RngStream,
) -> Result<LinearRgbImage> {
    check_cmos(x.height(), dead_rows, hot_pixel_rate, hot_value)?;
    let w = x.width();
    let (hot, rows) = cmos_defects(w, x.height(), dead_rows, hot_pixel_rate, rng);
    let mut y = x.clone();
    for c in 0..3 {
        let p = y.plane_mut(c);
        for &i in &hot {
            p[i] = hot_value;
        }
        for &r in &rows {
            p[r * w..(r + 1) * w].fill(0.0);
        }
    }
    Ok(y)
}

/// CMOS defects on the mosaic; hot values are clamped to `[0, 1]`.
pub fn corrupt_cmos_damage_bayer(
    bayer: &BayerImage,
    dead_rows: usize,
    hot_pixel_rate: f64,
    hot_value: f64,
    rng: &mut RngStream,
) -> Result<BayerImage> {
    check_cmos(bayer.height(), dead_rows, hot_pixel_rate, hot_value)?;
    let w = bayer.width();
    let (hot, rows) = cmos_defects(w, bayer.height(), dead_rows, hot_pixel_rate, rng);
    let mut data = bayer.data().to_vec();
    for &i in &hot {
        data[i] = hot_value;
    }
    for &r in &rows {
        data[r * w..(r + 1) * w].fill(0.0);
    }
    bayer.with_data_clamped(data)
}

/// `p ↦ max(p·M, 0)` per pixel.
pub fn apply_sensor_matrix(x: &LinearRgbImage, m: &Matrix3) -> Result<LinearRgbImage> {
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("sensor_matrix", "non-finite entry"));
    }
    Ok(x.map_pixels(|p| mul_row(p, m).map(|v| v.max(0.0))))
}
