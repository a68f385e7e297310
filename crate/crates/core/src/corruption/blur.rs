//! Motion and defocus point spread functions.

use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::kernel::{convolve, Kernel2D};

/// Line PSF of `length` taps along `angle` (radians, 0 = horizontal).
/// Each tap is weighted by `max(0, 1 − distance to the segment)`, then the
/// kernel is normalized.
pub fn motion_psf(length: f64, angle: f64) -> Result<Kernel2D> {
    if !(length >= 1.0) || !length.is_finite() {
        return Err(Error::param("length", format!("must be finite and >= 1, got {length}")));
    }
    if !angle.is_finite() {
        return Err(Error::param("angle", "must be finite"));
    }
    let half_len = 0.5 * (length - 1.0);
    let half = half_len.ceil() as usize + 1;
    let size = 2 * half + 1;
    let (dx, dy) = (angle.cos(), angle.sin());
    let h = half as isize;
    let mut taps = Vec::with_capacity(size * size);
    for y in -h..=h {
        for x in -h..=h {
            let (px, py) = (x as f64, y as f64);
            let t = (px * dx + py * dy).clamp(-half_len, half_len);
            let d = ((px - t * dx).powi(2) + (py - t * dy).powi(2)).sqrt();
            taps.push((1.0 - d).max(0.0));
        }
    }
    Kernel2D::new(size, taps)?.normalized()
}

/// Hard disk `x² + y² ≤ r²`, normalized. Radius 0 is the delta kernel.
pub fn disk_psf(radius: f64) -> Result<Kernel2D> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::param("radius", format!("must be finite and >= 0, got {radius}")));
    }
    let half = radius.floor() as usize;
    let size = 2 * half + 1;
    let h = half as isize;
    let r2 = radius * radius;
    let mut taps = Vec::with_capacity(size * size);
    for y in -h..=h {
        for x in -h..=h {
            taps.push(if ((x * x + y * y) as f64) <= r2 { 1.0 } else { 0.0 });
        }
    }
    Kernel2D::new(size, taps)?.normalized()
}

pub fn corrupt_motion_blur(x: &LinearRgbImage, length: f64, angle: f64) -> Result<LinearRgbImage> {
    let k = motion_psf(length, angle)?;
    Ok(convolve(x, &k))
}

pub fn corrupt_defocus_blur(x: &LinearRgbImage, radius: f64) -> Result<LinearRgbImage> {
    let k = disk_psf(radius)?;
    if k.size() == 1 {
        return Ok(x.clone());
    }
    Ok(convolve(x, &k))
}
