//! RGB and grayscale image files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pnm::{encode_pnm, parse_pnm, read_pnm, write_pnm, Pnm, PnmKind};
use crate::error::{Error, FormatCode, Result};
use crate::image::{GrayImage, LinearRgbImage};
use crate::isp::develop::encode_display;

pub const DEFAULT_DISPLAY_GAMMA: f64 = 2.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RgbMode {
    /// P6, maxval 65535, clamped linear values.
    Linear16Ppm,
    /// P6, maxval 255, after display encoding with `gamma`.
    Display8Ppm { gamma: f64 },
}

impl Default for RgbMode {
    fn default() -> Self {
        RgbMode::Display8Ppm {
            gamma: DEFAULT_DISPLAY_GAMMA,
        }
    }
}

fn to_u16(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

pub fn encode_rgb(img: &LinearRgbImage, mode: RgbMode) -> Result<Vec<u8>> {
    let (maxval, samples) = match mode {
        RgbMode::Linear16Ppm => {
            let mut s = Vec::with_capacity(3 * img.len());
            for i in 0..img.len() {
                for c in 0..3 {
                    s.push(to_u16(img.plane(c)[i]));
                }
            }
            (u16::MAX, s)
        }
        RgbMode::Display8Ppm { gamma } => (255, encode_display(img, gamma)?.into_iter().map(u16::from).collect()),
    };
    Ok(encode_pnm(&Pnm {
        kind: PnmKind::Rgb,
        width: img.width(),
        height: img.height(),
        maxval,
        samples,
    }))
}

pub fn write_rgb(img: &LinearRgbImage, path: &Path, mode: RgbMode) -> Result<()> {
    std::fs::write(path, encode_rgb(img, mode)?).map_err(|e| Error::io(path, e))
}

/// Samples divided by maxval; a P5 file is replicated into three channels.
/// No display decoding is applied.
pub fn decode_rgb(bytes: &[u8], path: &Path) -> Result<LinearRgbImage> {
    rgb_from_pnm(parse_pnm(bytes, path)?, path)
}

fn rgb_from_pnm(p: Pnm, path: &Path) -> Result<LinearRgbImage> {
    let scale = f64::from(p.maxval);
    let n = p.width * p.height;
    let planes: [Vec<f64>; 3] = match p.kind {
        PnmKind::Rgb => [0, 1, 2].map(|c| (0..n).map(|i| f64::from(p.samples[3 * i + c]) / scale).collect()),
        PnmKind::Gray => {
            let g: Vec<f64> = p.samples.iter().map(|&s| f64::from(s) / scale).collect();
            [g.clone(), g.clone(), g]
        }
    };
    LinearRgbImage::new(p.width, p.height, planes).map_err(|e| Error::format(FormatCode::PgmHeader, path, e.to_string()))
}

pub fn read_rgb(path: &Path) -> Result<LinearRgbImage> {
    rgb_from_pnm(read_pnm(path)?, path)
}

/// P5 graymap; a P6 file is reduced to its channel mean.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let p = read_pnm(path)?;
    let scale = f64::from(p.maxval);
    let data: Vec<f64> = match p.kind {
        PnmKind::Gray => p.samples.iter().map(|&s| f64::from(s) / scale).collect(),
        PnmKind::Rgb => p
            .samples
            .chunks_exact(3)
            .map(|c| (f64::from(c[0]) + f64::from(c[1]) + f64::from(c[2])) / (3.0 * scale))
            .collect(),
    };
    GrayImage::new(p.width, p.height, data).map_err(|e| Error::format(FormatCode::PgmHeader, path, e.to_string()))
}

/// 8-bit P5 of already display-encoded values in [0, 1].
pub fn encode_gray8(img: &GrayImage) -> Vec<u8> {
    encode_pnm(&Pnm {
        kind: PnmKind::Gray,
        width: img.width(),
        height: img.height(),
        maxval: 255,
        samples: img.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u16).collect(),
    })
}

pub fn write_gray8(img: &GrayImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_gray8(img)).map_err(|e| Error::io(path, e))
}

/// 16-bit P5 of values in [0, 1].
pub fn write_gray16(img: &GrayImage, path: &Path) -> Result<()> {
    write_pnm(
        &Pnm {
            kind: PnmKind::Gray,
            width: img.width(),
            height: img.height(),
            maxval: u16::MAX,
            samples: img.data().iter().map(|&v| to_u16(v)).collect(),
        },
        path,
    )
}
