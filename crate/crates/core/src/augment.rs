//! RAW-domain training augmentation: brightness, chromaticity and quality
//! branches, one of which is picked per draw.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::isp::denoise::make_gaussian_kernel;
use crate::kernel::convolve;
use crate::rng::RngStream;

/// Gaussian restricted to `[lo, hi]` by rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedNormal {
    pub mu: f64,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncatedNormal {
    pub fn new(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        let tn = Self { mu, sigma, lo, hi };
        tn.validate()?;
        Ok(tn)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.mu, self.sigma, self.lo, self.hi].iter().all(|v| v.is_finite()) {
            return Err(Error::param("truncated_normal", "all fields must be finite"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::param("sigma", format!("must be > 0, got {}", self.sigma)));
        }
        if !(self.lo < self.hi) {
            return Err(Error::param("lo", format!("need lo < hi, got [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }
}

/// Gives up rejection after this many draws and clamps; unreachable for any
/// interval within a few σ of the mean.
const MAX_REJECTIONS: usize = 1 << 20;

pub fn sample_truncated_normal(tn: &TruncatedNormal, rng: &mut RngStream) -> f64 {
    for _ in 0..MAX_REJECTIONS {
        let v = rng.normal(tn.mu, tn.sigma);
        if v >= tn.lo && v <= tn.hi {
            return v;
        }
    }
    tn.mu.clamp(tn.lo, tn.hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchProbabilities {
    pub original: f64,
    pub brightness: f64,
    pub chroma: f64,
    pub quality: f64,
}

impl Default for BranchProbabilities {
    fn default() -> Self {
        Self {
            original: 0.25,
            brightness: 0.25,
            chroma: 0.25,
            quality: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrightnessConfig {
    pub dark: TruncatedNormal,
    pub bright: TruncatedNormal,
    /// Probability of drawing from the dark component.
    pub dark_weight: f64,
}

impl Default for BrightnessConfig {
    fn default() -> Self {
        Self {
            dark: TruncatedNormal {
                mu: 0.2,
                sigma: 0.08,
                lo: 0.01,
                hi: 1.0,
            },
            bright: TruncatedNormal {
                mu: 3.5,
                sigma: 1.0,
                lo: 1.0,
                hi: 5.0,
            },
            dark_weight: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChromaConfig {
    /// Range of the red and blue coefficients; green takes up the rest of 3.
    pub range: [f64; 2],
}

impl Default for ChromaConfig {
    fn default() -> Self {
        Self { range: [0.9, 1.1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityOrder {
    #[default]
    BlurThenNoise,
    NoiseThenBlur,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityConfig {
    pub kernel_sizes: Vec<usize>,
    /// Probability of an anisotropic kernel.
    pub aniso_probability: f64,
    pub iso_width: [f64; 2],
    pub aniso_angle: [f64; 2],
    pub aniso_long_axis: [f64; 2],
    pub noise_sigma: [f64; 2],
    #[serde(default)]
    pub order: QualityOrder,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            kernel_sizes: (7..=21).step_by(2).collect(),
            aniso_probability: 0.5,
            iso_width: [0.1, 2.4],
            aniso_angle: [0.0, std::f64::consts::PI],
            aniso_long_axis: [0.5, 6.0],
            noise_sigma: [0.0, 0.1],
            order: QualityOrder::BlurThenNoise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub probabilities: BranchProbabilities,
    pub brightness: BrightnessConfig,
    pub chroma: ChromaConfig,
    pub quality: QualityConfig,
}

fn check_interval(name: &str, r: [f64; 2], min: f64) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && r[0] >= min {
        Ok(())
    } else {
        Err(Error::param(name, format!("invalid interval [{}, {}]", r[0], r[1])))
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in [0, 1], got {p}")))
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let p = &self.probabilities;
        for (name, v) in [
            ("probabilities.original", p.original),
            ("probabilities.brightness", p.brightness),
            ("probabilities.chroma", p.chroma),
            ("probabilities.quality", p.quality),
        ] {
            check_probability(name, v)?;
        }
        let total = p.original + p.brightness + p.chroma + p.quality;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param("probabilities", format!("must sum to 1, got {total}")));
        }
        self.brightness.dark.validate()?;
        self.brightness.bright.validate()?;
        check_probability("brightness.dark_weight", self.brightness.dark_weight)?;
        check_interval("chroma.range", self.chroma.range, 0.0)?;
        if self.chroma.range[1] > 1.5 {
            return Err(Error::param("chroma.range", "upper bound above 1.5 can drive green negative"));
        }
        let q = &self.quality;
        if q.kernel_sizes.is_empty() || q.kernel_sizes.iter().any(|s| s % 2 == 0) {
            return Err(Error::param("quality.kernel_sizes", "must be a non-empty list of odd sizes"));
        }
        check_probability("quality.aniso_probability", q.aniso_probability)?;
        check_interval("quality.iso_width", q.iso_width, f64::MIN_POSITIVE)?;
        check_interval("quality.aniso_angle", q.aniso_angle, f64::NEG_INFINITY)?;
        check_interval("quality.aniso_long_axis", q.aniso_long_axis, f64::MIN_POSITIVE)?;
        check_interval("quality.noise_sigma", q.noise_sigma, 0.0)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Original,
    Brightness,
    Chroma,
    Quality,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Original => "original",
            Branch::Brightness => "brightness",
            Branch::Chroma => "chroma",
            Branch::Quality => "quality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightnessSample {
    pub omega: f64,
    pub dark: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BlurSample {
    Iso { width: f64 },
    Aniso { angle: f64, long_axis: f64, short_axis: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualitySample {
    pub blur: BlurSample,
    pub kernel_size: usize,
    pub noise_sigma: f64,
}

/// Everything drawn for one augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSample {
    pub branch: Branch,
    pub brightness: Option<BrightnessSample>,
    pub chroma: Option<[f64; 3]>,
    pub quality: Option<QualitySample>,
}

pub fn sample_branch(p: &BranchProbabilities, rng: &mut RngStream) -> Branch {
    let u = rng.uniform();
    let mut acc = p.original;
    if u < acc {
        return Branch::Original;
    }
    acc += p.brightness;
    if u < acc {
        return Branch::Brightness;
    }
    acc += p.chroma;
    if u < acc {
        return Branch::Chroma;
    }
    Branch::Quality
}

pub fn sample_brightness(cfg: &BrightnessConfig, rng: &mut RngStream) -> BrightnessSample {
    let dark = rng.uniform() < cfg.dark_weight;
    let tn = if dark { &cfg.dark } else { &cfg.bright };
    BrightnessSample {
        omega: sample_truncated_normal(tn, rng),
        dark,
    }
}

/// Red and blue carry 40 fractional bits so that `ω_g = 3 − ω_r − ω_b` and
/// the sum are exact in binary floating point.
const CHROMA_GRID: f64 = (1u64 << 40) as f64;

pub fn sample_chromaticity(cfg: &ChromaConfig, rng: &mut RngStream) -> [f64; 3] {
    let mut draw = || (rng.uniform_range(cfg.range[0], cfg.range[1]) * CHROMA_GRID).round() / CHROMA_GRID;
    let r = draw();
    let b = draw();
    [r, 3.0 - r - b, b]
}

fn interval(r: [f64; 2], rng: &mut RngStream) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.uniform_range(r[0], r[1])
    }
}

pub fn sample_quality(cfg: &QualityConfig, rng: &mut RngStream) -> QualitySample {
    let blur = if rng.uniform() < cfg.aniso_probability {
        let angle = interval(cfg.aniso_angle, rng);
        let long_axis = interval(cfg.aniso_long_axis, rng);
        let short_axis = interval([cfg.aniso_long_axis[0].min(long_axis), long_axis], rng);
        BlurSample::Aniso {
            angle,
            long_axis,
            short_axis,
        }
    } else {
        BlurSample::Iso {
            width: interval(cfg.iso_width, rng),
        }
    };
    let kernel_size = cfg.kernel_sizes[rng.int_range(0, cfg.kernel_sizes.len() as u64 - 1) as usize];
    let noise_sigma = interval(cfg.noise_sigma, rng);
    QualitySample {
        blur,
        kernel_size,
        noise_sigma,
    }
}

pub fn apply_brightness(x: &LinearRgbImage, omega: f64) -> LinearRgbImage {
    x.map(|v| omega * v)
}

pub fn apply_chromaticity(x: &LinearRgbImage, w: [f64; 3]) -> LinearRgbImage {
    x.map_pixels(|p| [p[0] * w[0], p[1] * w[1], p[2] * w[2]])
}

fn add_awgn(img: &mut LinearRgbImage, sigma: f64, rng: &mut RngStream) {
    if sigma == 0.0 {
        return;
    }
    for c in 0..3 {
        for v in img.plane_mut(c) {
            *v += sigma * rng.standard_normal();
        }
    }
}

/// Blur with the sampled kernel and add AWGN, in the configured order.
/// `rng` supplies the per-pixel noise.
pub fn apply_quality(
    x: &LinearRgbImage,
    s: &QualitySample,
    order: QualityOrder,
    rng: &mut RngStream,
) -> Result<LinearRgbImage> {
    let kernel = match s.blur {
        BlurSample::Iso { width } => make_gaussian_kernel(width, width, 0.0, s.kernel_size)?,
        BlurSample::Aniso {
            angle,
            long_axis,
            short_axis,
        } => make_gaussian_kernel(long_axis, short_axis, angle, s.kernel_size)?,
    };
    Ok(match order {
        QualityOrder::BlurThenNoise => {
            let mut y = convolve(x, &kernel);
            add_awgn(&mut y, s.noise_sigma, rng);
            y
        }
        QualityOrder::NoiseThenBlur => {
            let mut y = x.clone();
            add_awgn(&mut y, s.noise_sigma, rng);
            convolve(&y, &kernel)
        }
    })
}

pub fn augment_brightness(
    x: &LinearRgbImage,
    cfg: &AugmentConfig,
    rng: &mut RngStream,
) -> Result<(LinearRgbImage, BrightnessSample)> {
    cfg.validate()?;
    let s = sample_brightness(&cfg.brightness, rng);
    Ok((apply_brightness(x, s.omega), s))
}

pub fn augment_chromaticity(
    x: &LinearRgbImage,
    cfg: &AugmentConfig,
    rng: &mut RngStream,
) -> Result<(LinearRgbImage, [f64; 3])> {
    cfg.validate()?;
    let w = sample_chromaticity(&cfg.chroma, rng);
    Ok((apply_chromaticity(x, w), w))
}

pub fn augment_quality(
    x: &LinearRgbImage,
    cfg: &AugmentConfig,
    rng: &mut RngStream,
) -> Result<(LinearRgbImage, QualitySample)> {
    cfg.validate()?;
    let s = sample_quality(&cfg.quality, rng);
    Ok((apply_quality(x, &s, cfg.quality.order, rng)?, s))
}

/// Picks one branch and applies it. The original branch returns a copy of
/// `x`.
pub fn augment_pipeline(
    x: &LinearRgbImage,
    cfg: &AugmentConfig,
    rng: &mut RngStream,
) -> Result<(LinearRgbImage, AugmentSample)> {
    cfg.validate()?;
    let branch = sample_branch(&cfg.probabilities, rng);
    let mut sample = AugmentSample {
        branch,
        brightness: None,
        chroma: None,
        quality: None,
    };
    let y = match branch {
        Branch::Original => x.clone(),
        Branch::Brightness => {
            let s = sample_brightness(&cfg.brightness, rng);
            sample.brightness = Some(s);
            apply_brightness(x, s.omega)
        }
        Branch::Chroma => {
            let w = sample_chromaticity(&cfg.chroma, rng);
            sample.chroma = Some(w);
            apply_chromaticity(x, w)
        }
        Branch::Quality => {
            let s = sample_quality(&cfg.quality, rng);
            sample.quality = Some(s);
            apply_quality(x, &s, cfg.quality.order, rng)?
        }
    };
    Ok((y, sample))
}

/// [`augment_pipeline`] on the substream of `(master_seed, image_index)`.
pub fn augment_indexed(
    x: &LinearRgbImage,
    cfg: &AugmentConfig,
    master_seed: u64,
    image_index: u64,
) -> Result<(LinearRgbImage, AugmentSample)> {
    augment_pipeline(x, cfg, &mut RngStream::substream(master_seed, image_index))
}
