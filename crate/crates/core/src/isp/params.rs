//! The full adapter parameter set and the map from unconstrained predictor
//! outputs to valid parameters.

use serde::{Deserialize, Serialize};

use super::color::{Matrix3, WbMode, IDENTITY3};
use super::nilut::NilutWeights;
use crate::error::{Error, Result};

/// Unconstrained vector layout:
/// `[Δg, Δr1, Δr2, θ (ignored), σ_logit, ρ_raw, ccm bias × 9 (row-major)]`.
pub const RAW_PARAM_LEN: usize = 15;
pub const KERNEL_SLOTS: usize = 5;
pub const MATRIX_SLOTS: usize = 10;
/// Slot that is carried for layout compatibility but never read.
pub const THETA_SLOT: usize = 3;

pub const R1_INIT: f64 = 3.0;
pub const R2_INIT: f64 = 2.0;
pub const RADIUS_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstrainMode {
    #[default]
    Normal,
    LowLight,
}

impl ConstrainMode {
    pub fn gain_init(self) -> f64 {
        match self {
            ConstrainMode::Normal => 1.0,
            ConstrainMode::LowLight => 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IspParams {
    pub g: f64,
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
    pub sigma: f64,
    pub rho: f64,
    pub ccm: Matrix3,
    #[serde(default)]
    pub wb_mode: WbMode,
    /// Omitted from documents when it is the all-zero identity network.
    #[serde(default, skip_serializing_if = "is_zero_lut")]
    pub lut: NilutWeights,
}

fn is_zero_lut(lut: &NilutWeights) -> bool {
    *lut == NilutWeights::identity()
}

impl Default for IspParams {
    fn default() -> Self {
        constrain_params(&[0.0; RAW_PARAM_LEN], ConstrainMode::Normal).expect("zero vector is valid")
    }
}

impl IspParams {
    /// Parameters under which every stage is an identity on equal-channel
    /// input (use with a 1×1 kernel).
    pub fn identity() -> Self {
        Self {
            g: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.g, self.r1, self.r2, self.theta, self.sigma, self.rho]
            .iter()
            .chain(self.ccm.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("params", "all entries must be finite"));
        }
        if self.g < 0.0 {
            return Err(Error::param("g", format!("must be >= 0, got {}", self.g)));
        }
        if self.r1 <= 0.0 || self.r2 <= 0.0 {
            return Err(Error::param("r1/r2", format!("must be > 0, got {} / {}", self.r1, self.r2)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::param("sigma", format!("must lie in (0, 1), got {}", self.sigma)));
        }
        if self.rho < 1.0 {
            return Err(Error::param("rho", format!("must be >= 1, got {}", self.rho)));
        }
        self.lut.validate()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps the 15-slot unconstrained vector to valid parameters. θ is fixed to
/// zero and the LUT to the identity.
pub fn constrain_params(raw: &[f64], mode: ConstrainMode) -> Result<IspParams> {
    if raw.len() != RAW_PARAM_LEN {
        return Err(Error::DimensionMismatch(format!(
            "raw parameter vector has length {}, expected {RAW_PARAM_LEN}",
            raw.len()
        )));
    }
    if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::param(format!("raw[{i}]"), "non-finite value"));
    }
    let mut ccm = IDENTITY3;
    for (k, b) in raw[6..].iter().enumerate() {
        ccm[k / 3][k % 3] += b;
    }
    // keep σ strictly inside the open interval even when the logistic saturates
    let sigma = logistic(raw[4]).clamp(f64::EPSILON, 1.0 - f64::EPSILON);
    Ok(IspParams {
        g: (mode.gain_init() + raw[0]).max(0.0),
        r1: (R1_INIT + raw[1]).max(RADIUS_FLOOR),
        r2: (R2_INIT + raw[2]).max(RADIUS_FLOOR),
        theta: 0.0,
        sigma,
        rho: 1.0 + raw[5].max(0.0),
        ccm,
        wb_mode: WbMode::default(),
        lut: NilutWeights::identity(),
    })
}

/// Right inverse of [`constrain_params`] on its range (θ slot set to zero).
pub fn unconstrain_params(params: &IspParams, mode: ConstrainMode) -> [f64; RAW_PARAM_LEN] {
    let mut raw = [0.0; RAW_PARAM_LEN];
    raw[0] = params.g - mode.gain_init();
    raw[1] = params.r1 - R1_INIT;
    raw[2] = params.r2 - R2_INIT;
    raw[4] = (params.sigma / (1.0 - params.sigma)).ln();
    raw[5] = params.rho - 1.0;
    for k in 0..9 {
        raw[6 + k] = params.ccm[k / 3][k % 3] - IDENTITY3[k / 3][k % 3];
    }
    raw
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_vector_initializations() {
        let p = constrain_params(&[0.0; RAW_PARAM_LEN], ConstrainMode::Normal).unwrap();
        assert_eq!((p.g, p.r1, p.r2, p.theta, p.sigma, p.rho), (1.0, 3.0, 2.0, 0.0, 0.5, 1.0));
        assert_eq!(p.ccm, IDENTITY3);
        assert!(p.lut.is_identity());
        let low = constrain_params(&[0.0; RAW_PARAM_LEN], ConstrainMode::LowLight).unwrap();
        assert_eq!(low.g, 5.0);
        assert_eq!(IspParams { g: 1.0, ..low }, p);
    }

    #[test]
    fn relu_floor_and_clamps() {
        let mut raw = [0.0; RAW_PARAM_LEN];
        raw[5] = -7.0;
        raw[1] = -10.0;
        raw[3] = 1.2;
        raw[4] = 800.0;
        let p = constrain_params(&raw, ConstrainMode::Normal).unwrap();
        assert_eq!(p.rho, 1.0);
        assert_eq!(p.r1, RADIUS_FLOOR);
        assert_eq!(p.theta, 0.0);
        assert!(p.sigma < 1.0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn wrong_length_and_non_finite() {
        assert!(matches!(constrain_params(&[0.0; 14], ConstrainMode::Normal), Err(Error::DimensionMismatch(_))));
        let mut raw = [0.0; RAW_PARAM_LEN];
        raw[7] = f64::NAN;
        assert!(constrain_params(&raw, ConstrainMode::Normal).is_err());
    }

    #[test]
    fn ccm_bias_layout_is_row_major() {
        let mut raw = [0.0; RAW_PARAM_LEN];
        raw[6 + 5] = 0.25; // row 1, col 2
        let p = constrain_params(&raw, ConstrainMode::Normal).unwrap();
        assert_eq!(p.ccm[1][2], 0.25);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let base = IspParams::default();
        for bad in [
            IspParams { sigma: 1.0, ..base.clone() },
            IspParams { sigma: 0.0, ..base.clone() },
            IspParams { rho: 0.99, ..base.clone() },
            IspParams { r2: 0.0, ..base.clone() },
            IspParams { g: -0.1, ..base.clone() },
            IspParams { theta: f64::INFINITY, ..base.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    proptest! {
        #[test]
        fn constrained_params_always_valid(raw in proptest::collection::vec(-50.0f64..50.0, RAW_PARAM_LEN)) {
            let p = constrain_params(&raw, ConstrainMode::Normal).unwrap();
            prop_assert!(p.validate().is_ok());
        }

        #[test]
        fn unconstrain_round_trips(raw in proptest::collection::vec(-1.5f64..1.5, RAW_PARAM_LEN)) {
            let mut raw = raw;
            raw[THETA_SLOT] = 0.0;
            raw[5] = raw[5].abs();
            let p = constrain_params(&raw, ConstrainMode::LowLight).unwrap();
            let back = unconstrain_params(&p, ConstrainMode::LowLight);
            for (a, b) in raw.iter().zip(back.iter()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
