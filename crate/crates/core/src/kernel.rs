//! Square convolution kernels and mirror-border convolution.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{mirror_index, LinearRgbImage};

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    /// Row-major, `taps[(dy + h) * size + (dx + h)]` with `h = size / 2`.
    taps: Vec<f64>,
    /// `(vertical, horizontal)` factors when the kernel is their outer product.
    separable: Option<(Vec<f64>, Vec<f64>)>,
}

impl Kernel2D {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::param("size", format!("kernel size must be odd and >= 1, got {size}")));
        }
        if taps.len() != size * size {
            return Err(Error::DimensionMismatch(format!(
                "{} taps for a {size}x{size} kernel",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::param("taps", "non-finite tap"));
        }
        Ok(Self {
            size,
            taps,
            separable: None,
        })
    }

    /// Outer product `vertical ⊗ horizontal`; convolution then runs in two passes.
    pub fn from_separable(vertical: Vec<f64>, horizontal: Vec<f64>) -> Result<Self> {
        let size = vertical.len();
        if horizontal.len() != size {
            return Err(Error::DimensionMismatch("separable factors differ in length".into()));
        }
        let mut taps = Vec::with_capacity(size * size);
        for v in &vertical {
            for h in &horizontal {
                taps.push(v * h);
            }
        }
        let mut k = Self::new(size, taps)?;
        k.separable = Some((vertical, horizontal));
        Ok(k)
    }

    pub fn identity() -> Self {
        Self::from_separable(vec![1.0], vec![1.0]).expect("1x1 kernel is valid")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn half(&self) -> usize {
        self.size / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at offset `(dx, dy)` from the centre.
    pub fn tap(&self, dx: isize, dy: isize) -> f64 {
        let h = self.half() as isize;
        self.taps[((dy + h) as usize) * self.size + (dx + h) as usize]
    }

    pub fn sum(&self) -> f64 {
        crate::image::pairwise_sum(&self.taps)
    }

    /// Rescales so the taps sum to one.
    pub fn normalized(mut self) -> Result<Self> {
        let s = self.sum();
        if !(s > 0.0) {
            return Err(Error::param("taps", "kernel sum must be positive to normalize"));
        }
        if let Some((v, h)) = &mut self.separable {
            let sv: f64 = crate::image::pairwise_sum(v);
            let sh: f64 = crate::image::pairwise_sum(h);
            v.iter_mut().for_each(|t| *t /= sv);
            h.iter_mut().for_each(|t| *t /= sh);
            let rebuilt = Self::from_separable(v.clone(), h.clone())?;
            return Ok(rebuilt);
        }
        self.taps.iter_mut().for_each(|t| *t /= s);
        Ok(self)
    }
}

/// 2-D convolution of one plane, `out(p) = Σ k(d) · in(p − d)`, mirror borders.
pub fn convolve_plane(plane: &[f64], width: usize, height: usize, kernel: &Kernel2D) -> Vec<f64> {
    if kernel.size == 1 {
        let t = kernel.taps[0];
        return plane.iter().map(|v| t * v).collect();
    }
    if let Some((v, h)) = &kernel.separable {
        let tmp = convolve_rows(plane, width, height, h);
        return convolve_cols(&tmp, width, height, v);
    }
    let half = kernel.half() as isize;
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dy in -half..=half {
                let sy = mirror_index(y as isize - dy, height);
                let base = sy * width;
                for dx in -half..=half {
                    let sx = mirror_index(x as isize - dx, width);
                    acc += kernel.tap(dx, dy) * plane[base + sx];
                }
            }
            *o = acc;
        }
    });
    out
}

fn convolve_rows(plane: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let src = &plane[y * width..(y + 1) * width];
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let d = k as isize - half;
                acc += t * src[mirror_index(x as isize - d, width)];
            }
            *o = acc;
        }
    });
    out
}

fn convolve_cols(plane: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let half = (taps.len() / 2) as isize;
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let d = k as isize - half;
                acc += t * plane[mirror_index(y as isize - d, height) * width + x];
            }
            *o = acc;
        }
    });
    out
}

/// Convolves each channel independently.
pub fn convolve(img: &LinearRgbImage, kernel: &Kernel2D) -> LinearRgbImage {
    let (w, h) = (img.width(), img.height());
    let planes = [0, 1, 2].map(|c| convolve_plane(img.plane(c), w, h, kernel));
    LinearRgbImage::from_planes_unchecked(w, h, planes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_or_ragged() {
        assert!(Kernel2D::new(2, vec![0.25; 4]).is_err());
        assert!(Kernel2D::new(3, vec![0.1; 8]).is_err());
    }

    #[test]
    fn identity_is_exact() {
        let img = LinearRgbImage::from_fn(5, 3, |x, y| [x as f64 * 0.1, y as f64 * 0.3, 0.7]);
        assert_eq!(convolve(&img, &Kernel2D::identity()), img);
    }

    #[test]
    fn separable_matches_direct() {
        let v = vec![0.2, 0.5, 0.3];
        let h = vec![0.1, 0.6, 0.3];
        let sep = Kernel2D::from_separable(v, h).unwrap();
        let direct = Kernel2D::new(3, sep.taps().to_vec()).unwrap();
        let img = LinearRgbImage::from_fn(7, 6, |x, y| [((x * 7 + y * 3) % 5) as f64, (x * y) as f64, 1.0]);
        let a = convolve(&img, &sep);
        let b = convolve(&img, &direct);
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn convolution_flips_the_kernel() {
        // impulse response reproduces the kernel itself (not its mirror)
        let mut taps = vec![0.0; 9];
        taps[5] = 1.0; // offset (dx=1, dy=0)
        let k = Kernel2D::new(3, taps).unwrap();
        let mut plane = vec![0.0; 25];
        plane[12] = 1.0;
        let out = convolve_plane(&plane, 5, 5, &k);
        assert_eq!(out[13], 1.0);
    }

    #[test]
    fn normalized_sums_to_one() {
        let k = Kernel2D::new(3, vec![1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0])
            .unwrap()
            .normalized()
            .unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-15);
        assert_eq!(k.tap(0, 0), 0.25);
    }
}
