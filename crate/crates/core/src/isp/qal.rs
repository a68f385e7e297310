//! Query-adaptive parameter prediction: learnable queries attend over a set
//! of image features and a small FFN turns each attended vector into one
//! scalar ISP parameter.
//!
//! The convolutional feature extractor is abstracted behind
//! [`FeatureProvider`]; only the attention and FFN arithmetic live here.

use serde::{Deserialize, Serialize};

use super::nn::{Activation, Dense};
use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QalWeights {
    pub d_k: usize,
    /// `n_q` rows of length `d_k`.
    pub queries: Vec<Vec<f64>>,
    pub key_proj: Dense,
    pub value_proj: Dense,
    pub ffn_hidden: Dense,
    pub ffn_out: Dense,
    pub activation: Activation,
}

impl QalWeights {
    /// Random projections and queries; the FFN output layer starts at zero so
    /// a fresh predictor emits all-zero raw parameters.
    pub fn init(n_queries: usize, feature_dim: usize, d_k: usize, rng: &mut RngStream) -> Self {
        let queries = (0..n_queries)
            .map(|_| (0..d_k).map(|_| rng.normal(0.0, 1.0)).collect())
            .collect();
        Self {
            d_k,
            queries,
            key_proj: Dense::glorot(feature_dim, d_k, rng),
            value_proj: Dense::glorot(feature_dim, d_k, rng),
            ffn_hidden: Dense::glorot(d_k, d_k, rng),
            ffn_out: Dense::zeros(d_k, 1),
            activation: Activation::Tanh,
        }
    }

    pub fn n_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.key_proj.inputs()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_k == 0 {
            return Err(Error::param("d_k", "must be positive"));
        }
        if let Some(i) = self.queries.iter().position(|q| q.len() != self.d_k) {
            return Err(Error::DimensionMismatch(format!("query {i} is not of length d_k = {}", self.d_k)));
        }
        let f = self.feature_dim();
        self.key_proj.validate("key_proj", f, self.d_k)?;
        self.value_proj.validate("value_proj", f, self.d_k)?;
        self.ffn_hidden.validate("ffn_hidden", self.d_k, self.d_k)?;
        self.ffn_out.validate("ffn_out", self.d_k, 1)?;
        Ok(())
    }
}

/// `FFN(softmax(q·kᵀ/√d_k)·v)`, one output per query.
pub fn qal_forward(features: &[Vec<f64>], weights: &QalWeights) -> Result<Vec<f64>> {
    weights.validate()?;
    if features.is_empty() {
        return Err(Error::param("features", "feature set is empty"));
    }
    let f = weights.feature_dim();
    if let Some(i) = features.iter().position(|v| v.len() != f) {
        return Err(Error::DimensionMismatch(format!(
            "feature {i} has length {}, expected {f}",
            features[i].len()
        )));
    }
    let keys: Vec<Vec<f64>> = features.iter().map(|x| weights.key_proj.forward(x)).collect();
    let values: Vec<Vec<f64>> = features.iter().map(|x| weights.value_proj.forward(x)).collect();
    let scale = 1.0 / (weights.d_k as f64).sqrt();

    let mut out = Vec::with_capacity(weights.n_queries());
    for q in &weights.queries {
        let scores: Vec<f64> = keys
            .iter()
            .map(|k| q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() * scale)
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        let mut attended = vec![0.0; weights.d_k];
        for (e, v) in exps.iter().zip(&values) {
            let a = e / z;
            for (o, vi) in attended.iter_mut().zip(v) {
                *o += a * vi;
            }
        }
        let hidden: Vec<f64> = weights
            .ffn_hidden
            .forward(&attended)
            .into_iter()
            .map(|h| weights.activation.apply(h))
            .collect();
        out.push(weights.ffn_out.forward(&hidden)[0]);
    }
    Ok(out)
}

/// Turns an image into a set of feature vectors for attention.
pub trait FeatureProvider {
    fn feature_dim(&self) -> usize;
    fn features(&self, img: &LinearRgbImage) -> Vec<Vec<f64>>;
}

/// Per-patch statistics on a `grid × grid` partition: mean R, G, B, mean
/// luminance and luminance standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchStatistics {
    pub grid: usize,
}

impl Default for PatchStatistics {
    fn default() -> Self {
        Self { grid: 4 }
    }
}

impl FeatureProvider for PatchStatistics {
    fn feature_dim(&self) -> usize {
        5
    }

    fn features(&self, img: &LinearRgbImage) -> Vec<Vec<f64>> {
        let (w, h) = (img.width(), img.height());
        let gx = self.grid.clamp(1, w.max(1));
        let gy = self.grid.clamp(1, h.max(1));
        let mut out = Vec::with_capacity(gx * gy);
        for py in 0..gy {
            let (y0, y1) = (py * h / gy, (py + 1) * h / gy);
            for px in 0..gx {
                let (x0, x1) = (px * w / gx, (px + 1) * w / gx);
                let mut sums = [0.0; 3];
                let mut lum = Vec::with_capacity((x1 - x0) * (y1 - y0));
                for y in y0..y1 {
                    for x in x0..x1 {
                        let p = img.pixel(x, y);
                        for c in 0..3 {
                            sums[c] += p[c];
                        }
                        lum.push(0.2126 * p[0] + 0.7152 * p[1] + 0.0722 * p[2]);
                    }
                }
                let n = lum.len().max(1) as f64;
                let mean_l = lum.iter().sum::<f64>() / n;
                let var_l = lum.iter().map(|l| (l - mean_l).powi(2)).sum::<f64>() / n;
                out.push(vec![sums[0] / n, sums[1] / n, sums[2] / n, mean_l, var_l.sqrt()]);
            }
        }
        out
    }
}
