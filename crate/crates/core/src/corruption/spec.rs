//! Corruption kinds, per-kind parameter records, sampling ranges and the
//! dispatcher.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::light::{corrupt_flare, corrupt_low_flare, corrupt_relight, procedural_flare, FlareLayerParams};
use super::optics::{corrupt_chromatic_aberration, corrupt_moire, corrupt_vignetting};
use super::sensor::{apply_sensor_matrix, corrupt_cmos_damage, corrupt_sensor_noise};
use super::weather::{
    corrupt_fog, corrupt_rain, corrupt_rain_fog, corrupt_snow, procedural_snow, DepthMap, RainStreaks, SnowLayer,
    SnowParams,
};
use super::{blur, NoiseModel};
use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::isp::color::Matrix3;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    LowLight,
    Overexposure,
    Flare,
    LowFlare,
    Fog,
    Rain,
    RainFog,
    Snow,
    MotionBlur,
    DefocusBlur,
    SensorNoise,
    CmosDamage,
    Moire,
    Vignetting,
    ChromaticAberration,
    SensorMatrixA,
    SensorMatrixB,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 17] = [
        CorruptionKind::LowLight,
        CorruptionKind::Overexposure,
        CorruptionKind::Flare,
        CorruptionKind::LowFlare,
        CorruptionKind::Fog,
        CorruptionKind::Rain,
        CorruptionKind::RainFog,
        CorruptionKind::Snow,
        CorruptionKind::MotionBlur,
        CorruptionKind::DefocusBlur,
        CorruptionKind::SensorNoise,
        CorruptionKind::CmosDamage,
        CorruptionKind::Moire,
        CorruptionKind::Vignetting,
        CorruptionKind::ChromaticAberration,
        CorruptionKind::SensorMatrixA,
        CorruptionKind::SensorMatrixB,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorruptionKind::LowLight => "low_light",
            CorruptionKind::Overexposure => "overexposure",
            CorruptionKind::Flare => "flare",
            CorruptionKind::LowFlare => "low_flare",
            CorruptionKind::Fog => "fog",
            CorruptionKind::Rain => "rain",
            CorruptionKind::RainFog => "rain_fog",
            CorruptionKind::Snow => "snow",
            CorruptionKind::MotionBlur => "motion_blur",
            CorruptionKind::DefocusBlur => "defocus_blur",
            CorruptionKind::SensorNoise => "sensor_noise",
            CorruptionKind::CmosDamage => "cmos_damage",
            CorruptionKind::Moire => "moire",
            CorruptionKind::Vignetting => "vignetting",
            CorruptionKind::ChromaticAberration => "chromatic_aberration",
            CorruptionKind::SensorMatrixA => "sensor_matrix_a",
            CorruptionKind::SensorMatrixB => "sensor_matrix_b",
        }
    }

    pub fn needs_depth(self) -> bool {
        matches!(self, CorruptionKind::Fog | CorruptionKind::RainFog)
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    /// Accepts `low_light`, `low-light` or `LowLight`, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| *c != '_' && *c != '-').flat_map(char::to_lowercase).collect();
        CorruptionKind::ALL
            .into_iter()
            .find(|k| k.as_str().replace('_', "") == norm)
            .ok_or_else(|| Error::param("kind", format!("unknown corruption kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelightParams {
    pub l: f64,
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlareParams {
    pub sigma2_scale: f64,
    pub layer: FlareLayerParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowFlareParams {
    pub l: f64,
    pub noise: NoiseModel,
    pub layer: FlareLayerParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FogParams {
    pub a: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainFogParams {
    pub streaks: RainStreaks,
    pub a: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionBlurParams {
    pub length: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefocusBlurParams {
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorNoiseParams {
    pub noise: NoiseModel,
    /// `None` disables quantization noise.
    pub bits: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmosDamageParams {
    pub dead_rows: usize,
    pub hot_pixel_rate: f64,
    pub hot_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoireParams {
    pub frequency: f64,
    pub angle: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VignettingParams {
    pub strength: f64,
    pub sigma_frac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChromaticAberrationParams {
    /// Per-channel `k1` for R, G, B.
    pub k1: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorMatrixParams {
    pub matrix: Matrix3,
}

/// Resolved parameters of one corruption. Serialized as the inner record;
/// the kind travels alongside in [`CorruptionSpec`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CorruptionParams {
    Relight(RelightParams),
    Flare(FlareParams),
    LowFlare(LowFlareParams),
    Fog(FogParams),
    Rain(RainStreaks),
    RainFog(RainFogParams),
    Snow(SnowParams),
    MotionBlur(MotionBlurParams),
    DefocusBlur(DefocusBlurParams),
    SensorNoise(SensorNoiseParams),
    CmosDamage(CmosDamageParams),
    Moire(MoireParams),
    Vignetting(VignettingParams),
    ChromaticAberration(ChromaticAberrationParams),
    SensorMatrix(SensorMatrixParams),
}

impl CorruptionParams {
    /// Parses the parameter record belonging to `kind`.
    pub fn from_value(kind: CorruptionKind, v: serde_json::Value) -> serde_json::Result<Self> {
        use serde_json::from_value as fv;
        use CorruptionKind as K;
        Ok(match kind {
            K::LowLight | K::Overexposure => Self::Relight(fv(v)?),
            K::Flare => Self::Flare(fv(v)?),
            K::LowFlare => Self::LowFlare(fv(v)?),
            K::Fog => Self::Fog(fv(v)?),
            K::Rain => Self::Rain(fv(v)?),
            K::RainFog => Self::RainFog(fv(v)?),
            K::Snow => Self::Snow(fv(v)?),
            K::MotionBlur => Self::MotionBlur(fv(v)?),
            K::DefocusBlur => Self::DefocusBlur(fv(v)?),
            K::SensorNoise => Self::SensorNoise(fv(v)?),
            K::CmosDamage => Self::CmosDamage(fv(v)?),
            K::Moire => Self::Moire(fv(v)?),
            K::Vignetting => Self::Vignetting(fv(v)?),
            K::ChromaticAberration => Self::ChromaticAberration(fv(v)?),
            K::SensorMatrixA | K::SensorMatrixB => Self::SensorMatrix(fv(v)?),
        })
    }

    pub fn matches(&self, kind: CorruptionKind) -> bool {
        use CorruptionKind as K;
        matches!(
            (kind, self),
            (K::LowLight | K::Overexposure, Self::Relight(_))
                | (K::Flare, Self::Flare(_))
                | (K::LowFlare, Self::LowFlare(_))
                | (K::Fog, Self::Fog(_))
                | (K::Rain, Self::Rain(_))
                | (K::RainFog, Self::RainFog(_))
                | (K::Snow, Self::Snow(_))
                | (K::MotionBlur, Self::MotionBlur(_))
                | (K::DefocusBlur, Self::DefocusBlur(_))
                | (K::SensorNoise, Self::SensorNoise(_))
                | (K::CmosDamage, Self::CmosDamage(_))
                | (K::Moire, Self::Moire(_))
                | (K::Vignetting, Self::Vignetting(_))
                | (K::ChromaticAberration, Self::ChromaticAberration(_))
                | (K::SensorMatrixA | K::SensorMatrixB, Self::SensorMatrix(_))
        )
    }
}

/// One corruption to apply. Parameters left as `None` are sampled from the
/// ranges with a substream of `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub seed: u64,
    pub params: Option<CorruptionParams>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    kind: CorruptionKind,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
}

impl TryFrom<SpecRepr> for CorruptionSpec {
    type Error = String;

    fn try_from(r: SpecRepr) -> std::result::Result<Self, String> {
        let params = match r.params {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(CorruptionParams::from_value(r.kind, v).map_err(|e| format!("params for {}: {e}", r.kind))?),
        };
        Ok(Self {
            kind: r.kind,
            seed: r.seed,
            params,
        })
    }
}

impl From<CorruptionSpec> for SpecRepr {
    fn from(s: CorruptionSpec) -> Self {
        Self {
            kind: s.kind,
            seed: s.seed,
            params: s.params.map(|p| serde_json::to_value(p).expect("params serialize")),
        }
    }
}

impl CorruptionSpec {
    pub fn sampled(kind: CorruptionKind, seed: u64) -> Self {
        Self { kind, seed, params: None }
    }

    pub fn with_params(kind: CorruptionKind, seed: u64, params: CorruptionParams) -> Result<Self> {
        if !params.matches(kind) {
            return Err(Error::param("params", format!("parameter record does not belong to kind `{kind}`")));
        }
        Ok(Self {
            kind,
            seed,
            params: Some(params),
        })
    }
}

/// Continuous sampling range: uniform on `[lo, hi]` or a uniform choice
/// among listed values. Explicit values are checked against `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRange {
    Uniform([f64; 2]),
    Choice(Vec<f64>),
}

impl ParamRange {
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            ParamRange::Uniform([lo, hi]) => (*lo, *hi),
            ParamRange::Choice(v) => (
                v.iter().copied().fold(f64::INFINITY, f64::min),
                v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match self {
            ParamRange::Uniform([lo, hi]) => {
                if lo == hi {
                    *lo
                } else {
                    rng.uniform_range(*lo, *hi)
                }
            }
            ParamRange::Choice(v) => v[rng.int_range(0, v.len() as u64 - 1) as usize],
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            ParamRange::Uniform([lo, hi]) => lo.is_finite() && hi.is_finite() && lo <= hi,
            ParamRange::Choice(v) => !v.is_empty() && v.iter().all(|x| x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(name, "range must be finite, non-empty and ordered"))
        }
    }

    fn check(&self, field: &str, value: f64) -> Result<()> {
        let (lo, hi) = self.bounds();
        if value >= lo && value <= hi {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                field: field.into(),
                value,
                lo,
                hi,
            })
        }
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange(pub [u64; 2]);

impl IntRange {
    pub fn sample(&self, rng: &mut RngStream) -> u64 {
        rng.int_range(self.0[0], self.0[1])
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.0[0] <= self.0[1] {
            Ok(())
        } else {
            Err(Error::param(name, "range must be ordered"))
        }
    }

    fn check(&self, field: &str, value: u64) -> Result<()> {
        if value >= self.0[0] && value <= self.0[1] {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                field: field.into(),
                value: value as f64,
                lo: self.0[0] as f64,
                hi: self.0[1] as f64,
            })
        }
    }
}

fn u(lo: f64, hi: f64) -> ParamRange {
    ParamRange::Uniform([lo, hi])
}

/// Sampling ranges for every corruption parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionRanges {
    pub low_light_l: ParamRange,
    pub overexposure_l: ParamRange,
    pub relight_delta_r: ParamRange,
    pub relight_delta_s: ParamRange,
    pub flare_sigma2_scale: ParamRange,
    pub flare_strength: ParamRange,
    pub flare_center: ParamRange,
    pub flare_glow_sigma_frac: ParamRange,
    pub flare_spikes: IntRange,
    pub fog_a: ParamRange,
    pub fog_beta: ParamRange,
    pub rain_count: IntRange,
    pub rain_length: ParamRange,
    pub rain_angle: ParamRange,
    pub rain_angle_jitter: ParamRange,
    pub rain_width: ParamRange,
    pub rain_intensity: ParamRange,
    pub snow_blotch_scale: ParamRange,
    pub snow_coverage: ParamRange,
    pub snow_blotch_opacity: ParamRange,
    pub snow_flakes: IntRange,
    pub snow_flake_radius: ParamRange,
    pub snow_brightness: ParamRange,
    pub motion_length: ParamRange,
    pub motion_angle: ParamRange,
    pub defocus_radius: ParamRange,
    pub noise_delta_r: ParamRange,
    pub noise_delta_s: ParamRange,
    pub noise_bits: IntRange,
    pub cmos_dead_rows: IntRange,
    pub cmos_hot_pixel_rate: ParamRange,
    pub cmos_hot_value: ParamRange,
    pub moire_frequency: ParamRange,
    pub moire_angle: ParamRange,
    pub moire_alpha: ParamRange,
    pub vignetting_strength: ParamRange,
    pub vignetting_sigma_frac: ParamRange,
    pub aberration_k1_r: ParamRange,
    pub aberration_k1_g: ParamRange,
    pub aberration_k1_b: ParamRange,
    pub sensor_matrix_a: Matrix3,
    pub sensor_matrix_b: Matrix3,
}

impl Default for CorruptionRanges {
    fn default() -> Self {
        Self {
            low_light_l: u(0.05, 0.4),
            overexposure_l: u(3.5, 5.0),
            relight_delta_r: u(0.001, 0.01),
            relight_delta_s: u(0.001, 0.01),
            flare_sigma2_scale: u(0.0, 2e-4),
            flare_strength: u(0.3, 0.8),
            flare_center: u(0.2, 0.8),
            flare_glow_sigma_frac: u(0.05, 0.15),
            flare_spikes: IntRange([4, 8]),
            fog_a: ParamRange::Choice(vec![0.3, 0.6, 0.9]),
            fog_beta: ParamRange::Choice(vec![0.5, 1.0, 2.0]),
            rain_count: IntRange([50, 150]),
            rain_length: u(8.0, 20.0),
            rain_angle: u(-0.3, 0.3),
            rain_angle_jitter: ParamRange::Choice(vec![0.05]),
            rain_width: u(1.0, 2.0),
            rain_intensity: u(0.1, 0.3),
            snow_blotch_scale: u(8.0, 24.0),
            snow_coverage: u(0.2, 0.5),
            snow_blotch_opacity: u(0.4, 0.8),
            snow_flakes: IntRange([100, 400]),
            snow_flake_radius: u(0.8, 2.0),
            snow_brightness: ParamRange::Choice(vec![0.9]),
            motion_length: u(5.0, 15.0),
            motion_angle: u(0.0, std::f64::consts::PI),
            defocus_radius: u(2.0, 6.0),
            noise_delta_r: u(0.002, 0.01),
            noise_delta_s: u(0.002, 0.01),
            noise_bits: IntRange([12, 12]),
            cmos_dead_rows: IntRange([2, 8]),
            cmos_hot_pixel_rate: u(0.0005, 0.005),
            cmos_hot_value: ParamRange::Choice(vec![1.0]),
            moire_frequency: u(0.15, 0.45),
            moire_angle: u(0.0, std::f64::consts::PI),
            moire_alpha: u(0.2, 0.5),
            vignetting_strength: u(0.5, 0.9),
            vignetting_sigma_frac: u(0.3, 0.6),
            aberration_k1_r: u(0.01, 0.05),
            aberration_k1_g: ParamRange::Choice(vec![0.0]),
            aberration_k1_b: u(-0.05, -0.01),
            sensor_matrix_a: [[1.12, -0.08, 0.02], [-0.10, 1.15, -0.06], [-0.02, -0.07, 1.04]],
            sensor_matrix_b: [[0.86, 0.10, 0.00], [0.12, 0.82, 0.14], [0.02, 0.08, 0.86]],
        }
    }
}

impl CorruptionRanges {
    pub fn validate(&self) -> Result<()> {
        let ranges: [(&str, &ParamRange); 35] = [
            ("low_light_l", &self.low_light_l),
            ("overexposure_l", &self.overexposure_l),
            ("relight_delta_r", &self.relight_delta_r),
            ("relight_delta_s", &self.relight_delta_s),
            ("flare_sigma2_scale", &self.flare_sigma2_scale),
            ("flare_strength", &self.flare_strength),
            ("flare_center", &self.flare_center),
            ("flare_glow_sigma_frac", &self.flare_glow_sigma_frac),
            ("fog_a", &self.fog_a),
            ("fog_beta", &self.fog_beta),
            ("rain_length", &self.rain_length),
            ("rain_angle", &self.rain_angle),
            ("rain_angle_jitter", &self.rain_angle_jitter),
            ("rain_width", &self.rain_width),
            ("rain_intensity", &self.rain_intensity),
            ("snow_blotch_scale", &self.snow_blotch_scale),
            ("snow_coverage", &self.snow_coverage),
            ("snow_blotch_opacity", &self.snow_blotch_opacity),
            ("snow_flake_radius", &self.snow_flake_radius),
            ("snow_brightness", &self.snow_brightness),
            ("motion_length", &self.motion_length),
            ("motion_angle", &self.motion_angle),
            ("defocus_radius", &self.defocus_radius),
            ("noise_delta_r", &self.noise_delta_r),
            ("noise_delta_s", &self.noise_delta_s),
            ("cmos_hot_pixel_rate", &self.cmos_hot_pixel_rate),
            ("cmos_hot_value", &self.cmos_hot_value),
            ("moire_frequency", &self.moire_frequency),
            ("moire_angle", &self.moire_angle),
            ("moire_alpha", &self.moire_alpha),
            ("vignetting_strength", &self.vignetting_strength),
            ("vignetting_sigma_frac", &self.vignetting_sigma_frac),
            ("aberration_k1_r", &self.aberration_k1_r),
            ("aberration_k1_g", &self.aberration_k1_g),
            ("aberration_k1_b", &self.aberration_k1_b),
        ];
        for (name, r) in ranges {
            r.validate(name)?;
        }
        for (name, r) in [
            ("flare_spikes", self.flare_spikes),
            ("rain_count", self.rain_count),
            ("snow_flakes", self.snow_flakes),
            ("noise_bits", self.noise_bits),
            ("cmos_dead_rows", self.cmos_dead_rows),
        ] {
            r.validate(name)?;
        }
        Ok(())
    }

    fn sample_layer(&self, rng: &mut RngStream) -> FlareLayerParams {
        FlareLayerParams {
            strength: self.flare_strength.sample(rng),
            center: [self.flare_center.sample(rng), self.flare_center.sample(rng)],
            glow_sigma_frac: self.flare_glow_sigma_frac.sample(rng),
            spikes: self.flare_spikes.sample(rng) as u32,
        }
    }

    fn sample_relight_noise(&self, rng: &mut RngStream) -> NoiseModel {
        NoiseModel::new(self.relight_delta_r.sample(rng), self.relight_delta_s.sample(rng))
    }

    fn sample_streaks(&self, rng: &mut RngStream) -> RainStreaks {
        RainStreaks {
            count: self.rain_count.sample(rng) as u32,
            length: self.rain_length.sample(rng),
            angle: self.rain_angle.sample(rng),
            angle_jitter: self.rain_angle_jitter.sample(rng),
            width: self.rain_width.sample(rng),
            intensity: self.rain_intensity.sample(rng),
        }
    }

    /// Draws a full parameter record for `kind`.
    pub fn sample(&self, kind: CorruptionKind, rng: &mut RngStream) -> CorruptionParams {
        use CorruptionKind as K;
        match kind {
            K::LowLight => CorruptionParams::Relight(RelightParams {
                l: self.low_light_l.sample(rng),
                noise: self.sample_relight_noise(rng),
            }),
            K::Overexposure => CorruptionParams::Relight(RelightParams {
                l: self.overexposure_l.sample(rng),
                noise: self.sample_relight_noise(rng),
            }),
            K::Flare => CorruptionParams::Flare(FlareParams {
                sigma2_scale: self.flare_sigma2_scale.sample(rng),
                layer: self.sample_layer(rng),
            }),
            K::LowFlare => CorruptionParams::LowFlare(LowFlareParams {
                l: self.low_light_l.sample(rng),
                noise: self.sample_relight_noise(rng),
                layer: self.sample_layer(rng),
            }),
            K::Fog => CorruptionParams::Fog(FogParams {
                a: self.fog_a.sample(rng),
                beta: self.fog_beta.sample(rng),
            }),
            K::Rain => CorruptionParams::Rain(self.sample_streaks(rng)),
            K::RainFog => CorruptionParams::RainFog(RainFogParams {
                streaks: self.sample_streaks(rng),
                a: self.fog_a.sample(rng),
                beta: self.fog_beta.sample(rng),
            }),
            K::Snow => CorruptionParams::Snow(SnowParams {
                blotch_scale: self.snow_blotch_scale.sample(rng),
                coverage: self.snow_coverage.sample(rng),
                blotch_opacity: self.snow_blotch_opacity.sample(rng),
                flakes: self.snow_flakes.sample(rng) as u32,
                flake_radius: self.snow_flake_radius.sample(rng),
                brightness: self.snow_brightness.sample(rng),
            }),
            K::MotionBlur => CorruptionParams::MotionBlur(MotionBlurParams {
                length: self.motion_length.sample(rng),
                angle: self.motion_angle.sample(rng),
            }),
            K::DefocusBlur => CorruptionParams::DefocusBlur(DefocusBlurParams {
                radius: self.defocus_radius.sample(rng),
            }),
            K::SensorNoise => CorruptionParams::SensorNoise(SensorNoiseParams {
                noise: NoiseModel::new(self.noise_delta_r.sample(rng), self.noise_delta_s.sample(rng)),
                bits: Some(self.noise_bits.sample(rng) as u32),
            }),
            K::CmosDamage => CorruptionParams::CmosDamage(CmosDamageParams {
                dead_rows: self.cmos_dead_rows.sample(rng) as usize,
                hot_pixel_rate: self.cmos_hot_pixel_rate.sample(rng),
                hot_value: self.cmos_hot_value.sample(rng),
            }),
            K::Moire => CorruptionParams::Moire(MoireParams {
                frequency: self.moire_frequency.sample(rng),
                angle: self.moire_angle.sample(rng),
                alpha: self.moire_alpha.sample(rng),
            }),
            K::Vignetting => CorruptionParams::Vignetting(VignettingParams {
                strength: self.vignetting_strength.sample(rng),
                sigma_frac: self.vignetting_sigma_frac.sample(rng),
            }),
            K::ChromaticAberration => CorruptionParams::ChromaticAberration(ChromaticAberrationParams {
                k1: [
                    self.aberration_k1_r.sample(rng),
                    self.aberration_k1_g.sample(rng),
                    self.aberration_k1_b.sample(rng),
                ],
            }),
            K::SensorMatrixA => CorruptionParams::SensorMatrix(SensorMatrixParams {
                matrix: self.sensor_matrix_a,
            }),
            K::SensorMatrixB => CorruptionParams::SensorMatrix(SensorMatrixParams {
                matrix: self.sensor_matrix_b,
            }),
        }
    }

    fn check_layer(&self, p: &FlareLayerParams) -> Result<()> {
        self.flare_strength.check("layer.strength", p.strength)?;
        self.flare_center.check("layer.center[0]", p.center[0])?;
        self.flare_center.check("layer.center[1]", p.center[1])?;
        self.flare_glow_sigma_frac.check("layer.glow_sigma_frac", p.glow_sigma_frac)?;
        self.flare_spikes.check("layer.spikes", p.spikes as u64)
    }

    fn check_relight_noise(&self, n: &NoiseModel) -> Result<()> {
        self.relight_delta_r.check("noise.delta_r", n.delta_r)?;
        self.relight_delta_s.check("noise.delta_s", n.delta_s)
    }

    fn check_streaks(&self, s: &RainStreaks) -> Result<()> {
        self.rain_count.check("count", s.count as u64)?;
        self.rain_length.check("length", s.length)?;
        self.rain_angle.check("angle", s.angle)?;
        self.rain_angle_jitter.check("angle_jitter", s.angle_jitter)?;
        self.rain_width.check("width", s.width)?;
        self.rain_intensity.check("intensity", s.intensity)
    }

    /// Range check for explicitly supplied parameters.
    pub fn check(&self, kind: CorruptionKind, params: &CorruptionParams) -> Result<()> {
        use CorruptionKind as K;
        use CorruptionParams as P;
        if !params.matches(kind) {
            return Err(Error::param("params", format!("parameter record does not belong to kind `{kind}`")));
        }
        match (kind, params) {
            (K::LowLight, P::Relight(p)) => {
                self.low_light_l.check("l", p.l)?;
                self.check_relight_noise(&p.noise)
            }
            (K::Overexposure, P::Relight(p)) => {
                self.overexposure_l.check("l", p.l)?;
                self.check_relight_noise(&p.noise)
            }
            (_, P::Flare(p)) => {
                self.flare_sigma2_scale.check("sigma2_scale", p.sigma2_scale)?;
                self.check_layer(&p.layer)
            }
            (_, P::LowFlare(p)) => {
                self.low_light_l.check("l", p.l)?;
                self.check_relight_noise(&p.noise)?;
                self.check_layer(&p.layer)
            }
            (_, P::Fog(p)) => {
                self.fog_a.check("a", p.a)?;
                self.fog_beta.check("beta", p.beta)
            }
            (_, P::Rain(s)) => self.check_streaks(s),
            (_, P::RainFog(p)) => {
                self.check_streaks(&p.streaks)?;
                self.fog_a.check("a", p.a)?;
                self.fog_beta.check("beta", p.beta)
            }
            (_, P::Snow(p)) => {
                self.snow_blotch_scale.check("blotch_scale", p.blotch_scale)?;
                self.snow_coverage.check("coverage", p.coverage)?;
                self.snow_blotch_opacity.check("blotch_opacity", p.blotch_opacity)?;
                self.snow_flakes.check("flakes", p.flakes as u64)?;
                self.snow_flake_radius.check("flake_radius", p.flake_radius)?;
                self.snow_brightness.check("brightness", p.brightness)
            }
            (_, P::MotionBlur(p)) => {
                self.motion_length.check("length", p.length)?;
                self.motion_angle.check("angle", p.angle)
            }
            (_, P::DefocusBlur(p)) => self.defocus_radius.check("radius", p.radius),
            (_, P::SensorNoise(p)) => {
                self.noise_delta_r.check("noise.delta_r", p.noise.delta_r)?;
                self.noise_delta_s.check("noise.delta_s", p.noise.delta_s)?;
                match p.bits {
                    Some(b) => self.noise_bits.check("bits", b as u64),
                    None => Ok(()),
                }
            }
            (_, P::CmosDamage(p)) => {
                self.cmos_dead_rows.check("dead_rows", p.dead_rows as u64)?;
                self.cmos_hot_pixel_rate.check("hot_pixel_rate", p.hot_pixel_rate)?;
                self.cmos_hot_value.check("hot_value", p.hot_value)
            }
            (_, P::Moire(p)) => {
                self.moire_frequency.check("frequency", p.frequency)?;
                self.moire_angle.check("angle", p.angle)?;
                self.moire_alpha.check("alpha", p.alpha)
            }
            (_, P::Vignetting(p)) => {
                self.vignetting_strength.check("strength", p.strength)?;
                self.vignetting_sigma_frac.check("sigma_frac", p.sigma_frac)
            }
            (_, P::ChromaticAberration(p)) => {
                self.aberration_k1_r.check("k1[0]", p.k1[0])?;
                self.aberration_k1_g.check("k1[1]", p.k1[1])?;
                self.aberration_k1_b.check("k1[2]", p.k1[2])
            }
            (_, P::SensorMatrix(p)) => {
                if p.matrix.iter().flatten().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::param("matrix", "non-finite entry"))
                }
            }
            (_, P::Relight(_)) => unreachable!("matched above"),
        }
    }
}

/// External inputs some corruptions need. Missing flare and snow layers fall
/// back to procedural ones; a missing depth map is an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct SideInputs<'a> {
    pub depth: Option<&'a DepthMap>,
    pub flare: Option<&'a LinearRgbImage>,
    pub snow: Option<&'a SnowLayer>,
}

/// Explicit parameters after a range check, or a fresh draw from the
/// parameter substream of `spec.seed`.
pub fn resolve_params(spec: &CorruptionSpec, ranges: &CorruptionRanges) -> Result<CorruptionParams> {
    match &spec.params {
        Some(p) => {
            ranges.check(spec.kind, p)?;
            Ok(p.clone())
        }
        None => {
            ranges.validate()?;
            Ok(ranges.sample(spec.kind, &mut RngStream::substream(spec.seed, 0)))
        }
    }
}

pub fn apply_corruption(spec: &CorruptionSpec, x: &LinearRgbImage, side: &SideInputs) -> Result<LinearRgbImage> {
    apply_corruption_with(spec, x, side, &CorruptionRanges::default()).map(|(y, _)| y)
}

fn require_depth<'a>(kind: CorruptionKind, side: &SideInputs<'a>) -> Result<&'a DepthMap> {
    side.depth.ok_or_else(|| {
        Error::MissingDependency(format!(
            "`{kind}` needs a depth map; supply one or request the procedural depth"
        ))
    })
}

/// Applies `spec` and returns the output together with the parameters that
/// were used. Per-pixel randomness comes from substream 1 of `spec.seed`.
pub fn apply_corruption_with(
    spec: &CorruptionSpec,
    x: &LinearRgbImage,
    side: &SideInputs,
    ranges: &CorruptionRanges,
) -> Result<(LinearRgbImage, CorruptionParams)> {
    use CorruptionParams as P;
    if spec.kind.needs_depth() {
        require_depth(spec.kind, side)?;
    }
    let params = resolve_params(spec, ranges)?;
    let mut rng = RngStream::substream(spec.seed, 1);
    let (w, h) = (x.width(), x.height());
    let flare_layer = |layer: &FlareLayerParams, rng: &mut RngStream| -> Result<LinearRgbImage> {
        match side.flare {
            Some(f) => Ok(f.clone()),
            None => procedural_flare(w, h, layer, rng),
        }
    };
    let y = match &params {
        P::Relight(p) => corrupt_relight(x, p.l, &p.noise, &mut rng)?,
        P::Flare(p) => {
            let f = flare_layer(&p.layer, &mut rng)?;
            corrupt_flare(x, &f, p.sigma2_scale, &mut rng)?
        }
        P::LowFlare(p) => {
            let f = flare_layer(&p.layer, &mut rng)?;
            corrupt_low_flare(x, p.l, &f, &p.noise, &mut rng)?
        }
        P::Fog(p) => corrupt_fog(x, require_depth(spec.kind, side)?, p.a, p.beta)?,
        P::Rain(s) => corrupt_rain(x, s, &mut rng)?,
        P::RainFog(p) => corrupt_rain_fog(x, &p.streaks, require_depth(spec.kind, side)?, p.a, p.beta, &mut rng)?,
        P::Snow(p) => match side.snow {
            Some(layer) => corrupt_snow(x, layer)?,
            None => corrupt_snow(x, &procedural_snow(w, h, p, &mut rng)?)?,
        },
        P::MotionBlur(p) => blur::corrupt_motion_blur(x, p.length, p.angle)?,
        P::DefocusBlur(p) => blur::corrupt_defocus_blur(x, p.radius)?,
        P::SensorNoise(p) => corrupt_sensor_noise(x, &p.noise, p.bits, &mut rng)?,
        P::CmosDamage(p) => corrupt_cmos_damage(x, p.dead_rows, p.hot_pixel_rate, p.hot_value, &mut rng)?,
        P::Moire(p) => corrupt_moire(x, p.frequency, p.angle, p.alpha)?,
        P::Vignetting(p) => corrupt_vignetting(x, p.strength, p.sigma_frac)?,
        P::ChromaticAberration(p) => corrupt_chromatic_aberration(x, p.k1)?,
        P::SensorMatrix(p) => apply_sensor_matrix(x, &p.matrix)?,
    };
    Ok((y, params))
}
