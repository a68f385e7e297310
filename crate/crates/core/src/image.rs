//! Floating-point image containers shared by every stage.
//!
//! Images are planar and row-major. Nothing here clamps: linear values are
//! allowed to leave [0, 1] between stages and only the display encoder clips.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Three-plane linear RGB image (camera RGB, not sRGB).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRgbImage {
    width: usize,
    height: usize,
    planes: [Vec<f64>; 3],
}

impl LinearRgbImage {
    pub fn new(width: usize, height: usize, planes: [Vec<f64>; 3]) -> Result<Self> {
        let n = width * height;
        for (c, p) in planes.iter().enumerate() {
            if p.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "plane {c} has {} samples, expected {width}x{height}={n}",
                    p.len()
                )));
            }
            if let Some(i) = p.iter().position(|v| !v.is_finite()) {
                return Err(Error::param(
                    "image",
                    format!("non-finite value in plane {c} at index {i}"),
                ));
            }
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    /// Skips validation; callers guarantee plane lengths and finiteness.
    pub(crate) fn from_planes_unchecked(width: usize, height: usize, planes: [Vec<f64>; 3]) -> Self {
        debug_assert!(planes.iter().all(|p| p.len() == width * height));
        Self {
            width,
            height,
            planes,
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let n = width * height;
        Self::from_planes_unchecked(
            width,
            height,
            [vec![rgb[0]; n], vec![rgb[1]; n], vec![rgb[2]; n]],
        )
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0; 3])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let n = width * height;
        let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        for y in 0..height {
            for x in 0..width {
                let p = f(x, y);
                for c in 0..3 {
                    planes[c].push(p[c]);
                }
            }
        }
        Self::from_planes_unchecked(width, height, planes)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        &self.planes[c]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.planes[c]
    }

    pub fn planes(&self) -> &[Vec<f64>; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [Vec<f64>; 3] {
        self.planes
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = y * self.width + x;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = y * self.width + x;
        for c in 0..3 {
            self.planes[c][i] = rgb[c];
        }
    }

    pub fn same_dims(&self, other: &LinearRgbImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_dims(&self, width: usize, height: usize, what: &str) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::DimensionMismatch(format!(
                "{what} is {}x{}, expected {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Applies `f` to every sample of every plane.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let planes = self.planes.clone().map(|p| p.into_iter().map(&f).collect());
        Self::from_planes_unchecked(self.width, self.height, planes)
    }

    /// Applies a per-pixel RGB transform.
    pub fn map_pixels(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let n = self.len();
        let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let out = f([self.planes[0][i], self.planes[1][i], self.planes[2][i]]);
            for c in 0..3 {
                planes[c][i] = out[c];
            }
        }
        Self::from_planes_unchecked(self.width, self.height, planes)
    }

    /// Mean over all samples of all planes.
    pub fn mean(&self) -> f64 {
        let sums: Vec<f64> = self.planes.iter().map(|p| pairwise_sum(p)).collect();
        (sums[0] + sums[1] + sums[2]) / (3 * self.len()) as f64
    }

    pub fn channel_mean(&self, c: usize) -> f64 {
        pairwise_sum(&self.planes[c]) / self.len() as f64
    }

    /// SHA-256 over the dimensions and the IEEE-754 bit patterns of every
    /// sample, little-endian, planes in R, G, B order.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.width as u64).to_le_bytes());
        h.update((self.height as u64).to_le_bytes());
        for p in &self.planes {
            for v in p {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn max_abs_diff(&self, other: &LinearRgbImage) -> f64 {
        assert!(self.same_dims(other), "max_abs_diff on images of different size");
        self.planes
            .iter()
            .zip(other.planes.iter())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Single-channel display image with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "gray image has {} samples, expected {}",
                data.len(),
                width * height
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param("gray", format!("value at index {i} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
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

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Recursive pairwise summation in slice order. Reductions that must be
/// reproducible go through here so the association order never depends on
/// threading.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mirror (reflect-101) index: -1 -> 1, n -> n-2. Preserves CFA phase.
#[inline]
pub fn mirror_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Bilinear sample of a plane with coordinates clamped to the frame edge.
pub fn sample_bilinear_clamped(plane: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let xc = x.clamp(0.0, (width - 1) as f64);
    let yc = y.clamp(0.0, (height - 1) as f64);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = xc - x0 as f64;
    let fy = yc - y0 as f64;
    let top = if fx == 0.0 {
        plane[y0 * width + x0]
    } else {
        plane[y0 * width + x0] * (1.0 - fx) + plane[y0 * width + x1] * fx
    };
    if fy == 0.0 {
        return top;
    }
    let bottom = if fx == 0.0 {
        plane[y1 * width + x0]
    } else {
        plane[y1 * width + x0] * (1.0 - fx) + plane[y1 * width + x1] * fx
    };
    top * (1.0 - fy) + bottom * fy
}
