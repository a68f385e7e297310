//! End-to-end development `I1 → I2 → I3 → I4 → I5` and display encoding.

use super::color::{apply_ccm, sog_white_balance};
use super::denoise::{default_kernel_size, gain_denoise_sharpen, make_gaussian_kernel};
use super::nilut::nilut_forward;
use super::params::{constrain_params, ConstrainMode, IspParams, KERNEL_SLOTS, MATRIX_SLOTS, RAW_PARAM_LEN};
use super::qal::{qal_forward, FeatureProvider, PatchStatistics, QalWeights};
use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::raw::{demosaic_bilinear, BayerImage};
use crate::rng::RngStream;

/// Every intermediate state of one development.
#[derive(Debug, Clone, PartialEq)]
pub struct DevelopStages {
    pub demosaiced: LinearRgbImage,
    pub i2: LinearRgbImage,
    pub i3: LinearRgbImage,
    pub wb_gains: [f64; 3],
    pub i4: LinearRgbImage,
    pub i5: LinearRgbImage,
}

/// Returns I5. `kernel_size = None` uses [`default_kernel_size`].
pub fn develop(bayer: &BayerImage, params: &IspParams, kernel_size: Option<usize>) -> Result<LinearRgbImage> {
    develop_demosaiced(&demosaic_bilinear(bayer), params, kernel_size)
}

pub fn develop_stages(bayer: &BayerImage, params: &IspParams, kernel_size: Option<usize>) -> Result<DevelopStages> {
    stages_from(demosaic_bilinear(bayer), params, kernel_size)
}

/// Same as [`develop`] starting from an already demosaiced image, so
/// repeated evaluations on one mosaic can skip demosaicing.
pub fn develop_demosaiced(
    demosaiced: &LinearRgbImage,
    params: &IspParams,
    kernel_size: Option<usize>,
) -> Result<LinearRgbImage> {
    params.validate()?;
    let size = kernel_size.unwrap_or_else(|| default_kernel_size(params.r1, params.r2));
    let kernel = make_gaussian_kernel(params.r1, params.r2, params.theta, size)?;
    let i2 = gain_denoise_sharpen(demosaiced, params.g, &kernel, params.sigma)?;
    let (i3, _) = sog_white_balance(&i2, params.rho, params.wb_mode)?;
    let i4 = apply_ccm(&i3, &params.ccm)?;
    nilut_forward(&i4, &params.lut)
}

fn stages_from(demosaiced: LinearRgbImage, params: &IspParams, kernel_size: Option<usize>) -> Result<DevelopStages> {
    params.validate()?;
    let size = kernel_size.unwrap_or_else(|| default_kernel_size(params.r1, params.r2));
    let kernel = make_gaussian_kernel(params.r1, params.r2, params.theta, size)?;
    let i2 = gain_denoise_sharpen(&demosaiced, params.g, &kernel, params.sigma)?;
    let (i3, wb_gains) = sog_white_balance(&i2, params.rho, params.wb_mode)?;
    let i4 = apply_ccm(&i3, &params.ccm)?;
    let i5 = nilut_forward(&i4, &params.lut)?;
    Ok(DevelopStages {
        demosaiced,
        i2,
        i3,
        wb_gains,
        i4,
        i5,
    })
}

/// Clamp to `[0, 1]`, apply `v^(1/gamma)` and quantize to 8 bits with
/// half-away-from-zero rounding. Interleaved RGB, row-major.
pub fn encode_display(img: &LinearRgbImage, gamma: f64) -> Result<Vec<u8>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", format!("must be finite and > 0, got {gamma}")));
    }
    let inv = 1.0 / gamma;
    let mut out = Vec::with_capacity(img.len() * 3);
    for i in 0..img.len() {
        for c in 0..3 {
            out.push(encode_value(img.plane(c)[i], inv));
        }
    }
    Ok(out)
}

#[inline]
fn encode_value(v: f64, inv_gamma: f64) -> u8 {
    let v = v.clamp(0.0, 1.0);
    let e = if inv_gamma == 1.0 { v } else { v.powf(inv_gamma) };
    (255.0 * e).round() as u8
}

/// Kernel-side and matrix-side predictors that stand in for trained
/// parameter heads: the kernel block sees the demosaiced input, the matrix
/// block sees I2.
#[derive(Debug, Clone, PartialEq)]
pub struct QalPredictor {
    pub features: PatchStatistics,
    pub kernel_block: QalWeights,
    pub matrix_block: QalWeights,
    pub mode: ConstrainMode,
}

impl QalPredictor {
    /// Untrained predictor; it outputs the zero raw vector.
    pub fn init(d_k: usize, mode: ConstrainMode, rng: &mut RngStream) -> Self {
        let features = PatchStatistics::default();
        let f = features.feature_dim();
        Self {
            features,
            kernel_block: QalWeights::init(KERNEL_SLOTS, f, d_k, rng),
            matrix_block: QalWeights::init(MATRIX_SLOTS, f, d_k, rng),
            mode,
        }
    }

    fn check(&self) -> Result<()> {
        if self.kernel_block.n_queries() != KERNEL_SLOTS || self.matrix_block.n_queries() != MATRIX_SLOTS {
            return Err(Error::DimensionMismatch(format!(
                "predictor blocks must have {KERNEL_SLOTS} and {MATRIX_SLOTS} queries"
            )));
        }
        Ok(())
    }

    /// Predicts parameters and develops in one pass.
    pub fn predict_and_develop(&self, bayer: &BayerImage, kernel_size: Option<usize>) -> Result<(IspParams, DevelopStages)> {
        self.check()?;
        let demosaiced = demosaic_bilinear(bayer);
        let kernel_raw = qal_forward(&self.features.features(&demosaiced), &self.kernel_block)?;
        let mut raw = vec![0.0; RAW_PARAM_LEN];
        raw[..KERNEL_SLOTS].copy_from_slice(&kernel_raw);
        let partial = constrain_params(&raw, self.mode)?;
        let size = kernel_size.unwrap_or_else(|| default_kernel_size(partial.r1, partial.r2));
        let kernel = make_gaussian_kernel(partial.r1, partial.r2, partial.theta, size)?;
        let i2 = gain_denoise_sharpen(&demosaiced, partial.g, &kernel, partial.sigma)?;
        let matrix_raw = qal_forward(&self.features.features(&i2), &self.matrix_block)?;
        raw[KERNEL_SLOTS..].copy_from_slice(&matrix_raw);
        let params = constrain_params(&raw, self.mode)?;
        let stages = stages_from(demosaiced, &params, Some(size))?;
        Ok((params, stages))
    }
}
