//! Bayer mosaic types, black/white level normalization, bilinear demosaic and
//! the green-average RAW preview.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{mirror_index, GrayImage, LinearRgbImage};

/// Encoding gamma used by the green-average RAW preview.
pub const PREVIEW_GAMMA: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CfaPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl CfaPattern {
    pub const ALL: [CfaPattern; 4] = [
        CfaPattern::Rggb,
        CfaPattern::Bggr,
        CfaPattern::Grbg,
        CfaPattern::Gbrg,
    ];

    /// Channel (0 = R, 1 = G, 2 = B) measured at `(row, col)`.
    #[inline]
    pub fn color_at(self, row: usize, col: usize) -> usize {
        let tile = match self {
            CfaPattern::Rggb => [0, 1, 1, 2],
            CfaPattern::Bggr => [2, 1, 1, 0],
            CfaPattern::Grbg => [1, 0, 2, 1],
            CfaPattern::Gbrg => [1, 2, 0, 1],
        };
        tile[((row & 1) << 1) | (col & 1)]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CfaPattern::Rggb => "RGGB",
            CfaPattern::Bggr => "BGGR",
            CfaPattern::Grbg => "GRBG",
            CfaPattern::Gbrg => "GBRG",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

/// Original integer code domain of the sensor readout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorMeta {
    pub bit_depth: u32,
    pub black_level: u32,
    pub white_level: u32,
    pub sensor_name: String,
}

impl Default for SensorMeta {
    fn default() -> Self {
        Self {
            bit_depth: 12,
            black_level: 0,
            white_level: 4095,
            sensor_name: "synthetic".to_string(),
        }
    }
}

impl SensorMeta {
    pub fn max_code(&self) -> u32 {
        (1u32 << self.bit_depth) - 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(8..=16).contains(&self.bit_depth) {
            return Err(Error::InvalidMetadata(format!(
                "bit_depth {} outside [8, 16]",
                self.bit_depth
            )));
        }
        if self.black_level >= self.white_level {
            return Err(Error::InvalidMetadata(format!(
                "black_level {} must be below white_level {}",
                self.black_level, self.white_level
            )));
        }
        if self.white_level > self.max_code() {
            return Err(Error::InvalidMetadata(format!(
                "white_level {} exceeds 2^{} - 1",
                self.white_level, self.bit_depth
            )));
        }
        Ok(())
    }
}

/// Normalized single-channel mosaic, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct BayerImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
    cfa: CfaPattern,
    meta: SensorMeta,
}

impl BayerImage {
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<f64>,
        cfa: CfaPattern,
        meta: SensorMeta,
    ) -> Result<Self> {
        check_even(width, height)?;
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "mosaic has {} samples, expected {width}x{height}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param(
                "mosaic",
                format!("sample {i} = {} outside [0, 1]", data[i]),
            ));
        }
        meta.validate()?;
        Ok(Self {
            width,
            height,
            data,
            cfa,
            meta,
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

    pub fn cfa(&self) -> CfaPattern {
        self.cfa
    }

    pub fn meta(&self) -> &SensorMeta {
        &self.meta
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Replaces the samples, clamping into [0, 1] to keep the invariant.
    pub fn with_data_clamped(&self, data: Vec<f64>) -> Result<Self> {
        let clamped = data
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Self::new(self.width, self.height, clamped, self.cfa, self.meta.clone())
    }
}

fn check_even(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0 {
        return Err(Error::OddDimensions { width, height });
    }
    Ok(())
}

/// Maps integer sensor codes to [0, 1] via the black and white levels.
pub fn normalize_raw(
    codes: &[u16],
    width: usize,
    height: usize,
    meta: SensorMeta,
    cfa: CfaPattern,
) -> Result<BayerImage> {
    meta.validate()?;
    check_even(width, height)?;
    if codes.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{} codes for a {width}x{height} mosaic",
            codes.len()
        )));
    }
    let max = meta.max_code();
    if let Some(i) = codes.iter().position(|&c| u32::from(c) > max) {
        return Err(Error::OutOfRange {
            field: format!("code[{i}]"),
            value: f64::from(codes[i]),
            lo: 0.0,
            hi: f64::from(max),
        });
    }
    let black = f64::from(meta.black_level);
    let range = f64::from(meta.white_level) - black;
    let data = codes
        .iter()
        .map(|&c| ((f64::from(c) - black) / range).clamp(0.0, 1.0))
        .collect();
    BayerImage::new(width, height, data, cfa, meta)
}

/// Inverse of [`normalize_raw`] on the code grid, rounding half away from zero.
pub fn denormalize_raw(bayer: &BayerImage) -> Vec<u16> {
    let black = f64::from(bayer.meta.black_level);
    let range = f64::from(bayer.meta.white_level) - black;
    bayer
        .data
        .iter()
        .map(|&v| (v * range + black).round() as u16)
        .collect()
}

/// Samples one channel per pixel according to `cfa`. Uses default sensor
/// metadata; see [`mosaic_with_meta`].
pub fn mosaic(rgb: &LinearRgbImage, cfa: CfaPattern) -> Result<BayerImage> {
    mosaic_with_meta(rgb, cfa, SensorMeta::default())
}

pub fn mosaic_with_meta(rgb: &LinearRgbImage, cfa: CfaPattern, meta: SensorMeta) -> Result<BayerImage> {
    let (w, h) = (rgb.width(), rgb.height());
    check_even(w, h)?;
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            data.push(rgb.plane(cfa.color_at(y, x))[y * w + x]);
        }
    }
    BayerImage::new(w, h, data, cfa, meta)
}

/// Bilinear demosaic. Each missing sample is the mean of the same-colour
/// samples in its 3x3 neighbourhood (2 or 4 of them), with mirror borders.
/// Measured samples are copied through untouched.
pub fn demosaic_bilinear(bayer: &BayerImage) -> LinearRgbImage {
    let (w, h) = (bayer.width, bayer.height);
    let cfa = bayer.cfa;
    let n = w * h;
    let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let at = |x: isize, y: isize| -> f64 {
        bayer.data[mirror_index(y, h) * w + mirror_index(x, w)]
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let own = cfa.color_at(y, x);
            let (xi, yi) = (x as isize, y as isize);
            for (c, plane) in planes.iter_mut().enumerate() {
                plane[i] = if c == own {
                    bayer.data[i]
                } else {
                    // Collect same-colour neighbours; reflect-101 keeps the
                    // CFA phase so their colours follow from the unmirrored
                    // offsets.
                    let mut vals = [0.0f64; 4];
                    let mut k = 0;
                    for dy in -1isize..=1 {
                        for dx in -1isize..=1 {
                            if (dx, dy) == (0, 0) {
                                continue;
                            }
                            let ry = (yi + dy).rem_euclid(2) as usize;
                            let rx = (xi + dx).rem_euclid(2) as usize;
                            if cfa.color_at(ry, rx) == c {
                                vals[k] = at(xi + dx, yi + dy);
                                k += 1;
                            }
                        }
                    }
                    match k {
                        2 => (vals[0] + vals[1]) * 0.5,
                        4 => ((vals[0] + vals[1]) + (vals[2] + vals[3])) * 0.25,
                        _ => unreachable!("bayer neighbourhood has 2 or 4 samples per colour"),
                    }
                };
            }
        }
    }
    LinearRgbImage::from_planes_unchecked(w, h, planes)
}

/// Green-average preview: ((G1 + G2) / 2)^(1/1.4) per 2x2 tile, upsampled by
/// nearest tile.
pub fn visualize_raw(bayer: &BayerImage) -> GrayImage {
    let (w, h) = (bayer.width, bayer.height);
    let mut out = vec![0.0; w * h];
    for ty in (0..h).step_by(2) {
        for tx in (0..w).step_by(2) {
            let mut greens = [0.0; 2];
            let mut k = 0;
            for dy in 0..2 {
                for dx in 0..2 {
                    if bayer.cfa.color_at(ty + dy, tx + dx) == 1 {
                        greens[k] = bayer.get(tx + dx, ty + dy);
                        k += 1;
                    }
                }
            }
            let v = ((greens[0] + greens[1]) * 0.5)
                .powf(1.0 / PREVIEW_GAMMA)
                .clamp(0.0, 1.0);
            for dy in 0..2 {
                for dx in 0..2 {
                    out[(ty + dy) * w + tx + dx] = v;
                }
            }
        }
    }
    GrayImage::new(w, h, out).expect("preview values are clamped into [0, 1]")
}
