//! Parametric RAW image signal processing, RAW-domain corruption synthesis,
//! augmentation sampling and robustness metrics.
//!
//! All randomness flows through [`rng::RngStream`] substreams so that every
//! operation is reproducible from a seed.

pub mod augment;
pub mod bench;
pub mod corruption;
pub mod error;
pub mod fit;
pub mod image;
pub mod io;
pub mod isp;
pub mod kernel;
pub mod metrics;
pub mod raw;
pub mod rng;

pub use error::{Error, Result};
pub use image::{GrayImage, LinearRgbImage};
pub use kernel::Kernel2D;
pub use raw::{BayerImage, CfaPattern, SensorMeta};
pub use rng::RngStream;
