//! Minimal dense layers for the LUT network and the attention predictor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    /// `sin(30·x)`, the SIREN first-layer frequency.
    Sine,
    /// tanh approximation of GELU.
    Gelu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sine => (30.0 * x).sin(),
            Activation::Gelu => {
                const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
                0.5 * x * (1.0 + (C * (x + 0.044_715 * x * x * x)).tanh())
            }
        }
    }
}

/// `y = W x + b` with `W` stored as `out` rows of `in` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dense {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: vec![vec![0.0; inputs]; outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform init in ±sqrt(6 / (in + out)), biases zero.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut RngStream) -> Self {
        let a = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..outputs)
            .map(|_| (0..inputs).map(|_| rng.uniform_range(-a, a)).collect())
            .collect();
        Self {
            weights,
            bias: vec![0.0; outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }

    pub fn validate(&self, name: &str, inputs: usize, outputs: usize) -> Result<()> {
        if self.weights.len() != outputs || self.bias.len() != outputs {
            return Err(Error::DimensionMismatch(format!(
                "{name}: expected {outputs} outputs, got {} weight rows / {} biases",
                self.weights.len(),
                self.bias.len()
            )));
        }
        if let Some(r) = self.weights.iter().position(|row| row.len() != inputs) {
            return Err(Error::DimensionMismatch(format!(
                "{name}: row {r} has {} inputs, expected {inputs}",
                self.weights[r].len()
            )));
        }
        let finite = self.weights.iter().flatten().chain(self.bias.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::param(name, "non-finite weight"));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().flatten().chain(self.bias.iter()).all(|&v| v == 0.0)
    }

    pub fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, row), b) in out.iter_mut().zip(&self.weights).zip(&self.bias) {
            let mut acc = *b;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            *o = acc;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs()];
        self.forward_into(x, &mut out);
        out
    }
}
