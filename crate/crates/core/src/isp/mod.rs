//! The parametric input-level ISP.

pub mod color;
pub mod denoise;
pub mod develop;
pub mod nilut;
pub mod nn;
pub mod params;
pub mod qal;

pub use color::{apply_ccm, mat3_mul, sog_gains, sog_white_balance, Matrix3, WbMode, IDENTITY3};
pub use denoise::{
    default_kernel_size, gain_denoise_sharpen, gaussian_taps_unnormalized, make_gaussian_kernel, GaussianCoeffs,
};
pub use develop::{develop, develop_demosaiced, develop_stages, encode_display, DevelopStages, QalPredictor};
pub use nilut::{nilut_forward, NilutWeights};
pub use nn::{Activation, Dense};
pub use params::{constrain_params, unconstrain_params, ConstrainMode, IspParams, RAW_PARAM_LEN};
pub use qal::{qal_forward, FeatureProvider, PatchStatistics, QalWeights};
