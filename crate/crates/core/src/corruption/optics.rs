//! Lens and display artifacts: Moiré, vignetting, chromatic aberration.

use crate::error::{Error, Result};
use crate::image::{sample_bilinear_clamped, LinearRgbImage};

/// `p = 0.5·(1 + sin(2π·f·(u·cosθ + v·sinθ)))`, `y = (1 − α)·x + α·x·p`.
pub fn corrupt_moire(x: &LinearRgbImage, frequency: f64, angle: f64, alpha: f64) -> Result<LinearRgbImage> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(Error::param("frequency", format!("must be finite and > 0, got {frequency}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    if !angle.is_finite() {
        return Err(Error::param("angle", "must be finite"));
    }
    if alpha == 0.0 {
        return Ok(x.clone());
    }
    let (s, c) = angle.sin_cos();
    let w = x.width();
    let pattern: Vec<f64> = (0..x.len())
        .map(|i| {
            let (u, v) = ((i % w) as f64, (i / w) as f64);
            0.5 * (1.0 + (std::f64::consts::TAU * frequency * (u * c + v * s)).sin())
        })
        .collect();
    let mut y = x.clone();
    for ch in 0..3 {
        for (val, p) in y.plane_mut(ch).iter_mut().zip(&pattern) {
            *val = (1.0 - alpha) * *val + alpha * (*val * p);
        }
    }
    Ok(y)
}

/// Gain `1 − s·(1 − exp(−r² / (2·(sigma_frac·diag)²)))` about the frame
/// centre, `diag` the full diagonal in pixel-centre units.
pub fn vignetting_gain(width: usize, height: usize, strength: f64, sigma_frac: f64) -> Vec<f64> {
    let cx = (width.max(1) - 1) as f64 / 2.0;
    let cy = (height.max(1) - 1) as f64 / 2.0;
    let diag = (2.0 * cx).hypot(2.0 * cy);
    let sigma = sigma_frac * diag;
    let denom = 2.0 * sigma * sigma;
    let mut g = Vec::with_capacity(width * height);
    for v in 0..height {
        for u in 0..width {
            let r2 = (u as f64 - cx).powi(2) + (v as f64 - cy).powi(2);
            let e = if denom > 0.0 { (-r2 / denom).exp() } else { 1.0 };
            g.push(1.0 - strength * (1.0 - e));
        }
    }
    g
}

pub fn corrupt_vignetting(x: &LinearRgbImage, strength: f64, sigma_frac: f64) -> Result<LinearRgbImage> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::param("strength", format!("must lie in [0, 1], got {strength}")));
    }
    if !(sigma_frac > 0.0) || !sigma_frac.is_finite() {
        return Err(Error::param("sigma_frac", format!("must be finite and > 0, got {sigma_frac}")));
    }
    if strength == 0.0 {
        return Ok(x.clone());
    }
    let gain = vignetting_gain(x.width(), x.height(), strength, sigma_frac);
    let mut y = x.clone();
    for c in 0..3 {
        for (v, g) in y.plane_mut(c).iter_mut().zip(&gain) {
            *v *= g;
        }
    }
    Ok(y)
}

/// Solves `r_dst = r·(1 + k·r²)` for `r` by Newton iteration from `r_dst`.
fn invert_radial(r_dst: f64, k: f64) -> f64 {
    let mut r = r_dst;
    for _ in 0..32 {
        let f = r * (1.0 + k * r * r) - r_dst;
        let df = 1.0 + 3.0 * k * r * r;
        if df <= 0.0 {
            break;
        }
        let step = f / df;
        r -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    r
}

fn distort_plane(plane: &[f64], width: usize, height: usize, k: f64) -> Vec<f64> {
    if k == 0.0 {
        return plane.to_vec();
    }
    let cx = (width - 1) as f64 / 2.0;
    let cy = (height - 1) as f64 / 2.0;
    let unit = cx.hypot(cy);
    let mut out = Vec::with_capacity(plane.len());
    for v in 0..height {
        for u in 0..width {
            let (dx, dy) = ((u as f64 - cx) / unit, (v as f64 - cy) / unit);
            let r_dst = dx.hypot(dy);
            let scale = if r_dst > 0.0 { invert_radial(r_dst, k) / r_dst } else { 1.0 };
            let sx = cx + dx * scale * unit;
            let sy = cy + dy * scale * unit;
            out.push(sample_bilinear_clamped(plane, width, height, sx, sy));
        }
    }
    out
}

/// Per-channel radial distortion `r_dst = r_src·(1 + k1_c·r_src²)`, with
/// radius normalized by the half-diagonal.
pub fn corrupt_chromatic_aberration(x: &LinearRgbImage, k1: [f64; 3]) -> Result<LinearRgbImage> {
    if let Some(c) = k1.iter().position(|k| !(k.abs() < 1.0)) {
        return Err(Error::param("k1", format!("|k1[{c}]| must be < 1, got {}", k1[c])));
    }
    let (w, h) = (x.width(), x.height());
    if w < 2 || h < 2 {
        return Ok(x.clone());
    }
    let planes = [0, 1, 2].map(|c| distort_plane(x.plane(c), w, h, k1[c]));
    LinearRgbImage::new(w, h, planes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moire_examples() {
        let x = LinearRgbImage::filled(64, 64, [0.5; 3]);
        assert_eq!(corrupt_moire(&x, 0.3, 0.4, 0.0).unwrap(), x);
        let y = corrupt_moire(&x, 0.25, 0.0, 1.0).unwrap();
        // f = 1/4, θ = 0: u = 1 gives p = 1, u = 3 gives p = 0
        assert!((y.pixel(1, 0)[0] - 0.5).abs() < 1e-12);
        assert!(y.pixel(3, 0)[0].abs() < 1e-12);
        let z = corrupt_moire(&x, 0.37, 0.3, 0.4).unwrap();
        assert!((z.mean() / x.mean() - 0.8).abs() < 0.01);
    }

    #[test]
    fn vignetting_examples() {
        let x = LinearRgbImage::filled(33, 21, [0.8; 3]);
        let y = corrupt_vignetting(&x, 0.7, 0.4).unwrap();
        assert_eq!(y.pixel(16, 10), [0.8; 3]);
        assert_eq!(corrupt_vignetting(&x, 0.0, 0.4).unwrap(), x);
        // corner sits at half the diagonal, i.e. 2σ when sigma_frac = 1/4
        let g = vignetting_gain(33, 21, 1.0, 0.25);
        assert!((g[0] - (-2.0f64).exp()).abs() < 1e-12);
        assert!((g[0] - 0.1353).abs() < 1e-4);
    }

    fn red_centroid(img: &LinearRgbImage, c: usize) -> (f64, f64) {
        let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
        for v in 0..img.height() {
            for u in 0..img.width() {
                let p = img.pixel(u, v)[c];
                sx += p * u as f64;
                sy += p * v as f64;
                s += p;
            }
        }
        (sx / s, sy / s)
    }

    #[test]
    fn aberration_moves_red_outward() {
        let mut x = LinearRgbImage::zeros(41, 41);
        for v in 28..31 {
            for u in 28..31 {
                x.set_pixel(u, v, [1.0; 3]);
            }
        }
        let y = corrupt_chromatic_aberration(&x, [0.05, 0.0, 0.0]).unwrap();
        let (rx, ry) = red_centroid(&y, 0);
        let (gx, gy) = red_centroid(&y, 1);
        assert_eq!((gx, gy), (29.0, 29.0));
        assert_eq!(y.plane(2), x.plane(2));
        assert!(rx > 29.0 && ry > 29.0);
    }

    #[test]
    fn aberration_identity_and_constant() {
        let x = LinearRgbImage::from_fn(12, 10, |u, v| [(u * v) as f64 / 120.0, 0.2, u as f64 / 12.0]);
        assert!(corrupt_chromatic_aberration(&x, [0.0; 3]).unwrap().max_abs_diff(&x) < 1e-6);
        let c = LinearRgbImage::filled(12, 10, [0.3, 0.5, 0.7]);
        assert!(corrupt_chromatic_aberration(&c, [0.04, 0.01, -0.04]).unwrap().max_abs_diff(&c) < 1e-12);
        assert!(corrupt_chromatic_aberration(&x, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn newton_inverse() {
        for k in [-0.05, 0.03, 0.2] {
            for r in [0.0, 0.1, 0.5, 0.9] {
                let rs = invert_radial(r, k);
                assert!((rs * (1.0 + k * rs * rs) - r).abs() < 1e-12);
            }
        }
    }
}
