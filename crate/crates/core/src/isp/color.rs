//! Shades-of-Gray white balance and the colour correction matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{pairwise_sum, LinearRgbImage};

pub type Matrix3 = [[f64; 3]; 3];

pub const IDENTITY3: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn mat3_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, o) in row.iter_mut().enumerate() {
            *o = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// How the Minkowski channel gains are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WbMode {
    /// `I3 = I2 · diag(m)` with `m_i = channel norm / global norm`.
    #[default]
    Multiply,
    /// Classical correction, `I3 = I2 · diag(1/m)`.
    Reciprocal,
    /// Gains forced to one.
    Bypass,
}

/// Minkowski ρ-mean channel gains `m_i = (P_i / P)^(1/ρ)` where `P_i` is the
/// mean of `v^ρ` over channel `i` and `P` the same mean over every sample.
/// Negative samples are treated as zero here only.
pub fn sog_gains(img: &LinearRgbImage, rho: f64) -> Result<[f64; 3]> {
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::param("rho", format!("must be finite and >= 1, got {rho}")));
    }
    let n = img.len() as f64;
    let power_means: [f64; 3] = [0, 1, 2].map(|c| {
        let powered: Vec<f64> = if rho == 1.0 {
            img.plane(c).iter().map(|&v| v.max(0.0)).collect()
        } else {
            img.plane(c).iter().map(|&v| v.max(0.0).powf(rho)).collect()
        };
        pairwise_sum(&powered) / n
    });
    // P = (P_r + P_g + P_b) / 3, folded into the ratio so that equal channels
    // give a ratio of exactly one.
    let total = power_means[0] + power_means[1] + power_means[2];
    if !(total > 0.0) {
        return Ok([1.0; 3]);
    }
    Ok(power_means.map(|p| {
        let ratio = 3.0 * p / total;
        if rho == 1.0 {
            ratio
        } else {
            ratio.powf(1.0 / rho)
        }
    }))
}

/// White balance per `mode`; returns the balanced image and the gains that
/// were multiplied in.
pub fn sog_white_balance(
    img: &LinearRgbImage,
    rho: f64,
    mode: WbMode,
) -> Result<(LinearRgbImage, [f64; 3])> {
    let m = sog_gains(img, rho)?;
    let applied = match mode {
        WbMode::Multiply => m,
        WbMode::Reciprocal => m.map(|g| if g > 0.0 { 1.0 / g } else { 1.0 }),
        WbMode::Bypass => return Ok((img.clone(), [1.0; 3])),
    };
    let mut out = img.clone();
    for (c, g) in applied.iter().enumerate() {
        out.plane_mut(c).iter_mut().for_each(|v| *v *= g);
    }
    Ok((out, applied))
}

/// Row-vector pixel times matrix: `out_j = Σ_i p_i · M[i][j]`.
pub fn apply_ccm(img: &LinearRgbImage, ccm: &Matrix3) -> Result<LinearRgbImage> {
    if ccm.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::param("ccm", "non-finite entry"));
    }
    Ok(img.map_pixels(|p| mul_row(p, ccm)))
}

#[inline]
pub(crate) fn mul_row(p: [f64; 3], m: &Matrix3) -> [f64; 3] {
    [0, 1, 2].map(|j| p[0] * m[0][j] + p[1] * m[1][j] + p[2] * m[2][j])
}
