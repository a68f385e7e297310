//! Neural implicit 3D LUT: a residual per-pixel MLP, 3→32→32→32→3.

use serde::{Deserialize, Serialize};

use super::nn::{Activation, Dense};
use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::rng::RngStream;

pub const NILUT_HIDDEN: usize = 32;
pub const NILUT_HIDDEN_LAYERS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NilutWeights {
    pub activation: Activation,
    /// Always true; kept in the document so the residual form is explicit.
    pub residual: bool,
    pub layers: Vec<Dense>,
}

impl Default for NilutWeights {
    fn default() -> Self {
        Self::identity()
    }
}

fn dims() -> [(usize, usize); NILUT_HIDDEN_LAYERS + 1] {
    [(3, NILUT_HIDDEN), (NILUT_HIDDEN, NILUT_HIDDEN), (NILUT_HIDDEN, NILUT_HIDDEN), (NILUT_HIDDEN, 3)]
}

impl NilutWeights {
    /// All-zero network. The residual makes it the identity map.
    pub fn identity() -> Self {
        Self {
            activation: Activation::Tanh,
            residual: true,
            layers: dims().iter().map(|&(i, o)| Dense::zeros(i, o)).collect(),
        }
    }

    /// Random hidden layers with a zero output layer: still the identity,
    /// but with non-degenerate hidden features.
    pub fn with_random_hidden(rng: &mut RngStream, activation: Activation) -> Self {
        let mut layers: Vec<Dense> = dims().iter().map(|&(i, o)| Dense::glorot(i, o, rng)).collect();
        *layers.last_mut().unwrap() = Dense::zeros(NILUT_HIDDEN, 3);
        Self {
            activation,
            residual: true,
            layers,
        }
    }

    /// Every layer random, including biases scaled by `bias_scale`.
    pub fn random(rng: &mut RngStream, activation: Activation, bias_scale: f64) -> Self {
        let layers = dims()
            .iter()
            .map(|&(i, o)| {
                let mut d = Dense::glorot(i, o, rng);
                d.bias.iter_mut().for_each(|b| *b = bias_scale * rng.uniform_range(-1.0, 1.0));
                d
            })
            .collect();
        Self {
            activation,
            residual: true,
            layers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.residual {
            return Err(Error::param("lut.residual", "the LUT network is always residual"));
        }
        let want = dims();
        if self.layers.len() != want.len() {
            return Err(Error::DimensionMismatch(format!(
                "LUT network has {} layers, expected {}",
                self.layers.len(),
                want.len()
            )));
        }
        for (k, (layer, &(i, o))) in self.layers.iter().zip(want.iter()).enumerate() {
            layer.validate(&format!("lut.layers[{k}]"), i, o)?;
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.layers.last().is_some_and(Dense::is_zero)
    }

    /// `out = in + MLP(in)` for one pixel.
    pub fn eval_pixel(&self, rgb: [f64; 3]) -> [f64; 3] {
        let mut a = [0.0; NILUT_HIDDEN];
        let mut b = [0.0; NILUT_HIDDEN];
        self.layers[0].forward_into(&rgb, &mut a);
        a.iter_mut().for_each(|v| *v = self.activation.apply(*v));
        for layer in &self.layers[1..NILUT_HIDDEN_LAYERS] {
            layer.forward_into(&a, &mut b);
            b.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            std::mem::swap(&mut a, &mut b);
        }
        let mut delta = [0.0; 3];
        self.layers[NILUT_HIDDEN_LAYERS].forward_into(&a, &mut delta);
        [rgb[0] + delta[0], rgb[1] + delta[1], rgb[2] + delta[2]]
    }
}

pub fn nilut_forward(img: &LinearRgbImage, weights: &NilutWeights) -> Result<LinearRgbImage> {
    weights.validate()?;
    if weights.is_identity() {
        return Ok(img.clone());
    }
    Ok(img.map_pixels(|p| weights.eval_pixel(p)))
}
