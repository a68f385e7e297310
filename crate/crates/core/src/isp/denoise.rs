//! Gain, anisotropic Gaussian denoise and the sharpness blend.

use crate::error::{Error, Result};
use crate::image::LinearRgbImage;
use crate::kernel::{convolve, Kernel2D};

/// Largest kernel the automatic size rule will produce.
pub const MAX_AUTO_KERNEL: usize = 21;

/// Quadratic-form coefficients of the oriented Gaussian
/// `exp(-(b0·x² + 2·b1·x·y + b2·y²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl GaussianCoeffs {
    /// `r1` is the major axis (along x when `theta = 0`), `r2` the minor axis.
    pub fn from_axes(r1: f64, r2: f64, theta: f64) -> Result<Self> {
        if !(r1 > 0.0) || !r1.is_finite() {
            return Err(Error::param("r1", format!("must be positive, got {r1}")));
        }
        if !(r2 > 0.0) || !r2.is_finite() {
            return Err(Error::param("r2", format!("must be positive, got {r2}")));
        }
        if !theta.is_finite() {
            return Err(Error::param("theta", "must be finite"));
        }
        let (s, c) = theta.sin_cos();
        let r1s = r1 * r1;
        let r2s = r2 * r2;
        Ok(Self {
            b0: c * c / (2.0 * r1s) + s * s / (2.0 * r2s),
            b1: (2.0 * theta).sin() / (4.0 * r1s) * ((r1 / r2).powi(2) - 1.0),
            b2: s * s / (2.0 * r1s) + c * c / (2.0 * r2s),
        })
    }

    #[inline]
    pub fn weight(&self, x: f64, y: f64) -> f64 {
        (-(self.b0 * x * x + 2.0 * self.b1 * x * y + self.b2 * y * y)).exp()
    }
}

/// `2·ceil(2·max(r1, r2)) + 1`, capped at [`MAX_AUTO_KERNEL`].
pub fn default_kernel_size(r1: f64, r2: f64) -> usize {
    let reach = (2.0 * r1.max(r2)).ceil().max(0.0) as usize;
    (2 * reach + 1).min(MAX_AUTO_KERNEL)
}

fn check_size(size: usize) -> Result<()> {
    if size == 0 || size % 2 == 0 {
        return Err(Error::param("size", format!("kernel size must be odd and >= 1, got {size}")));
    }
    Ok(())
}

/// Un-normalized taps, row-major over `y, x ∈ [-(size-1)/2, (size-1)/2]`.
pub fn gaussian_taps_unnormalized(r1: f64, r2: f64, theta: f64, size: usize) -> Result<Vec<f64>> {
    check_size(size)?;
    let coeffs = GaussianCoeffs::from_axes(r1, r2, theta)?;
    let h = (size / 2) as isize;
    let mut taps = Vec::with_capacity(size * size);
    for y in -h..=h {
        for x in -h..=h {
            taps.push(coeffs.weight(x as f64, y as f64));
        }
    }
    Ok(taps)
}

/// Oriented Gaussian kernel normalized to unit sum. With no cross term the
/// kernel is stored in separable form.
pub fn make_gaussian_kernel(r1: f64, r2: f64, theta: f64, size: usize) -> Result<Kernel2D> {
    check_size(size)?;
    let coeffs = GaussianCoeffs::from_axes(r1, r2, theta)?;
    let h = (size / 2) as isize;
    if coeffs.b1 == 0.0 {
        let horizontal: Vec<f64> = (-h..=h).map(|x| coeffs.weight(x as f64, 0.0)).collect();
        let vertical: Vec<f64> = (-h..=h).map(|y| coeffs.weight(0.0, y as f64)).collect();
        return Kernel2D::from_separable(vertical, horizontal)?.normalized();
    }
    Kernel2D::new(size, gaussian_taps_unnormalized(r1, r2, theta, size)?)?.normalized()
}

/// `I2' = (g·I1) ⊛ k`, then `I2 = I2' + (g·I1 − I2')·σ`.
pub fn gain_denoise_sharpen(
    img: &LinearRgbImage,
    gain: f64,
    kernel: &Kernel2D,
    sigma: f64,
) -> Result<LinearRgbImage> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::param("sigma", format!("must lie in (0, 1), got {sigma}")));
    }
    if !(gain >= 0.0) || !gain.is_finite() {
        return Err(Error::param("g", format!("must be finite and >= 0, got {gain}")));
    }
    Ok(blend(img, gain, kernel, sigma))
}

/// Same as [`gain_denoise_sharpen`] with σ allowed to hit the closed
/// endpoints, for reference computations.
pub(crate) fn blend(img: &LinearRgbImage, gain: f64, kernel: &Kernel2D, sigma: f64) -> LinearRgbImage {
    let gained = img.map(|v| gain * v);
    let blurred = convolve(&gained, kernel);
    let (w, h) = (img.width(), img.height());
    let planes = [0, 1, 2].map(|c| {
        blurred
            .plane(c)
            .iter()
            .zip(gained.plane(c))
            .map(|(&b, &g)| b + (g - b) * sigma)
            .collect()
    });
    LinearRgbImage::from_planes_unchecked(w, h, planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn isotropic_kernel_is_transpose_symmetric() {
        let k = make_gaussian_kernel(1.7, 1.7, 0.0, 7).unwrap();
        for y in -3..=3 {
            for x in -3..=3 {
                assert!((k.tap(x, y) - k.tap(y, x)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unnormalized_examples() {
        let t = gaussian_taps_unnormalized(3.0, 2.0, 0.0, 5).unwrap();
        // centre, then (x=1, y=0)
        assert_eq!(t[12], 1.0);
        assert!((t[13] - (-1.0f64 / 18.0).exp()).abs() < 1e-15);
        assert!((t[13] - 0.94596).abs() < 1e-5);
        // (x=0, y=1) uses the minor axis: b2 = 1/8
        assert!((t[17] - (-0.125f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn parameter_errors() {
        assert!(make_gaussian_kernel(0.0, 1.0, 0.0, 3).is_err());
        assert!(make_gaussian_kernel(1.0, -1.0, 0.0, 3).is_err());
        assert!(make_gaussian_kernel(1.0, 1.0, 0.0, 4).is_err());
        assert!(make_gaussian_kernel(1.0, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn default_size_rule() {
        assert_eq!(default_kernel_size(3.0, 2.0), 13);
        assert_eq!(default_kernel_size(0.2, 0.1), 3);
        assert_eq!(default_kernel_size(9.0, 2.0), 21);
    }

    #[test]
    fn blend_endpoints() {
        let img = LinearRgbImage::from_fn(9, 7, |x, y| [(x * y) as f64 / 63.0, x as f64 / 9.0, 0.5]);
        let k = make_gaussian_kernel(2.0, 1.0, 0.0, 7).unwrap();
        let near_one = gain_denoise_sharpen(&img, 1.5, &k, 1.0 - 1e-9).unwrap();
        assert!(near_one.max_abs_diff(&img.map(|v| 1.5 * v)) < 1e-6);
        let near_zero = gain_denoise_sharpen(&img, 1.5, &k, 1e-9).unwrap();
        let blurred = convolve(&img.map(|v| 1.5 * v), &k);
        assert!(near_zero.max_abs_diff(&blurred) < 1e-6);
        assert!(gain_denoise_sharpen(&img, 1.0, &k, 1.0).is_err());
        assert!(gain_denoise_sharpen(&img, 1.0, &k, 0.0).is_err());
    }

    #[test]
    fn delta_kernel_is_pure_gain() {
        let img = LinearRgbImage::from_fn(4, 4, |x, y| [x as f64 * 0.1, y as f64 * 0.2, 0.3]);
        let out = gain_denoise_sharpen(&img, 2.0, &Kernel2D::identity(), 0.37).unwrap();
        assert_eq!(out, img.map(|v| 2.0 * v));
    }

    proptest! {
        #[test]
        fn taps_positive_and_normalized(r1 in 0.2f64..6.0, r2 in 0.2f64..6.0, theta in -3.2f64..3.2, half in 0usize..10) {
            let k = make_gaussian_kernel(r1, r2, theta, 2 * half + 1).unwrap();
            let q = GaussianCoeffs::from_axes(r1, r2, theta).unwrap();
            let h = half as isize;
            for y in -h..=h {
                for x in -h..=h {
                    // exp underflows to zero only far out on strongly elongated kernels
                    let (xf, yf) = (x as f64, y as f64);
                    let expo = q.b0 * xf * xf + 2.0 * q.b1 * xf * yf + q.b2 * yf * yf;
                    prop_assert!(k.tap(x, y) > 0.0 || expo > 700.0);
                }
            }
            prop_assert!((k.sum() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn axis_aligned_kernels_are_point_symmetric(r1 in 0.2f64..6.0, r2 in 0.2f64..6.0, quarter in 0usize..2) {
            let theta = quarter as f64 * std::f64::consts::FRAC_PI_2;
            let k = make_gaussian_kernel(r1, r2, theta, 9).unwrap();
            for y in -4isize..=4 {
                for x in -4isize..=4 {
                    prop_assert!((k.tap(x, y) - k.tap(-x, -y)).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn blend_is_positively_homogeneous(a in 0.0f64..4.0, sigma in 0.01f64..0.99) {
            let img = LinearRgbImage::from_fn(6, 6, |x, y| [((x + 2 * y) % 5) as f64 / 5.0, 0.2, (x as f64).sin().abs()]);
            let k = make_gaussian_kernel(1.3, 0.8, 0.0, 5).unwrap();
            let lhs = gain_denoise_sharpen(&img.map(|v| a * v), 1.2, &k, sigma).unwrap();
            let rhs = gain_denoise_sharpen(&img, 1.2, &k, sigma).unwrap().map(|v| a * v);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }
}
