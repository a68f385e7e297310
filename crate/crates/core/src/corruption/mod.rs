//! RAW-domain corruption synthesis on linear demosaiced images.
//!
//! Each kind has a direct operation (`corrupt_*`) taking explicit
//! parameters, and [`apply_corruption`] dispatches a [`CorruptionSpec`],
//! sampling any missing parameters from [`CorruptionRanges`].

pub mod blur;
pub mod light;
pub mod optics;
pub mod sensor;
pub mod spec;
pub mod weather;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use blur::{corrupt_defocus_blur, corrupt_motion_blur, disk_psf, motion_psf};
pub use light::{corrupt_flare, corrupt_low_flare, corrupt_relight, procedural_flare, FlareLayerParams};
pub use optics::{corrupt_chromatic_aberration, corrupt_moire, corrupt_vignetting, vignetting_gain};
pub use sensor::{
    apply_sensor_matrix, corrupt_cmos_damage, corrupt_cmos_damage_bayer, corrupt_sensor_noise,
    corrupt_sensor_noise_bayer, quantization_bound,
};
pub use spec::{
    apply_corruption, apply_corruption_with, resolve_params, CorruptionKind, CorruptionParams, CorruptionRanges,
    CorruptionSpec, IntRange, ParamRange, SideInputs,
};
pub use weather::{
    corrupt_fog, corrupt_rain, corrupt_rain_fog, corrupt_snow, procedural_snow, rain_layer, DepthMap, RainStreaks,
    SnowLayer, SnowParams,
};

/// Read noise standard deviation and shot noise coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub delta_r: f64,
    pub delta_s: f64,
    /// Centre the Gaussian on the signal as well as adding the signal,
    /// doubling the mean.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub literal_mean: bool,
}

impl NoiseModel {
    pub fn new(delta_r: f64, delta_s: f64) -> Self {
        Self {
            delta_r,
            delta_s,
            literal_mean: false,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.delta_r == 0.0 && self.delta_s == 0.0
    }

    /// Model variance at signal level `s`.
    pub fn variance(&self, s: f64) -> f64 {
        self.delta_r * self.delta_r + self.delta_s * s.max(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_r >= 0.0) || !self.delta_r.is_finite() {
            return Err(Error::param("delta_r", format!("must be finite and >= 0, got {}", self.delta_r)));
        }
        if !(self.delta_s >= 0.0) || !self.delta_s.is_finite() {
            return Err(Error::param("delta_s", format!("must be finite and >= 0, got {}", self.delta_s)));
        }
        Ok(())
    }
}
