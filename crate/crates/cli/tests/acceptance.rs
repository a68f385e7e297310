//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rawbench_cli::{cmd_bench, BenchArgs, ImageOut};
use rawbench_core::augment::{
    sample_branch, sample_brightness, sample_chromaticity, sample_quality, AugmentConfig,
};
use rawbench_core::bench::{BenchManifest, DepthSource, ImageSource};
use rawbench_core::corruption::{
    apply_corruption, apply_sensor_matrix, corrupt_chromatic_aberration, corrupt_cmos_damage, corrupt_defocus_blur,
    corrupt_flare, corrupt_fog, corrupt_low_flare, corrupt_moire, corrupt_motion_blur, corrupt_rain, corrupt_rain_fog,
    corrupt_relight, corrupt_sensor_noise, corrupt_snow, corrupt_vignetting, quantization_bound, CorruptionKind,
    CorruptionSpec, DepthMap, NoiseModel, RainStreaks, SideInputs, SnowLayer,
};
use rawbench_core::fit::{fit_isp_params, FitConfig};
use rawbench_core::io::{self, RgbMode};
use rawbench_core::isp::{
    develop, gain_denoise_sharpen, gaussian_taps_unnormalized, make_gaussian_kernel, nilut_forward, qal_forward,
    sog_white_balance, Activation, Dense, IspParams, NilutWeights, QalWeights, WbMode, IDENTITY3,
};
use rawbench_core::metrics::{build_report, corruption_degradation, relative_cd, truncated_mean, EvalRecord};
use rawbench_core::raw::{demosaic_bilinear, mosaic, normalize_raw, denormalize_raw};
use rawbench_core::{CfaPattern, LinearRgbImage, RngStream, SensorMeta};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rand_image(rng: &mut RngStream, w: usize, h: usize) -> LinearRgbImage {
    LinearRgbImage::from_fn(w, h, |_, _| [rng.uniform(), rng.uniform(), rng.uniform()])
}

fn max_diff(a: &LinearRgbImage, b: &LinearRgbImage) -> f64 {
    a.max_abs_diff(b)
}

fn bits_equal(a: &LinearRgbImage, b: &LinearRgbImage) -> bool {
    a.same_dims(b) && (0..3).all(|c| a.plane(c).iter().zip(b.plane(c)).all(|(x, y)| x.to_bits() == y.to_bits()))
}

// Reflect-101 index and brute-force convolution, written independently of the
// library kernels.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

fn brute_convolve(img: &LinearRgbImage, taps: &[f64], size: usize) -> LinearRgbImage {
    let h = (size / 2) as isize;
    let (w, ht) = (img.width(), img.height());
    LinearRgbImage::from_fn(w, ht, |x, y| {
        let mut acc = [0.0; 3];
        for dy in -h..=h {
            for dx in -h..=h {
                let k = taps[((dy + h) as usize) * size + (dx + h) as usize];
                let sx = reflect(x as isize - dx, w);
                let sy = reflect(y as isize - dy, ht);
                let p = img.pixel(sx, sy);
                for c in 0..3 {
                    acc[c] += k * p[c];
                }
            }
        }
        acc
    })
}

fn c01_identity_chain() -> Outcome {
    let mut rng = RngStream::from_seed(101);
    let t = Instant::now();
    let mut gray = 0;
    for i in 0..100 {
        let (w, h) = (2 * rng.int_range(4, 16) as usize, 2 * rng.int_range(4, 16) as usize);
        let cfa = [CfaPattern::Rggb, CfaPattern::Bggr, CfaPattern::Grbg, CfaPattern::Gbrg][i % 4];
        // the white-balance stage is an identity only on gray input; colored
        // fixtures run with it bypassed
        let (rgb, wb_mode) = if i % 2 == 0 {
            gray += 1;
            let v = rng.uniform();
            (LinearRgbImage::filled(w, h, [v; 3]), WbMode::Multiply)
        } else {
            (rand_image(&mut rng, w, h), WbMode::Bypass)
        };
        let bayer = mosaic(&rgb, cfa).map_err(|e| e.to_string())?;
        let params = IspParams {
            sigma: rng.uniform_range(0.01, 0.99),
            rho: rng.uniform_range(1.0, 8.0),
            wb_mode,
            ..IspParams::identity()
        };
        let got = develop(&bayer, &params, Some(1)).map_err(|e| e.to_string())?;
        let want = demosaic_bilinear(&bayer);
        ensure!(bits_equal(&got, &want), "fixture {i}: max diff {:e}", max_diff(&got, &want));
    }
    let s = t.elapsed().as_secs_f64();
    ensure!(s <= 1.0, "took {s:.3} s");
    Ok(format!("100 fixtures ({gray} gray, multiply WB; {} colored, WB bypassed) bit-exact in {s:.3} s", 100 - gray))
}

fn c02_kernel_math() -> Outcome {
    let mut rng = RngStream::from_seed(202);
    let mut worst: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for _ in 0..20 {
        let r1 = rng.uniform_range(0.3, 4.0);
        let r2 = rng.uniform_range(0.3, 4.0);
        let theta = rng.uniform_range(-PI, PI);
        let size = 2 * rng.int_range(1, 5) as usize + 1;
        let taps = gaussian_taps_unnormalized(r1, r2, theta, size).map_err(|e| e.to_string())?;
        // literal transcription of the coefficient formulas
        let (c, s) = (theta.cos(), theta.sin());
        let b0 = c.powi(2) / (2.0 * r1.powi(2)) + s.powi(2) / (2.0 * r2.powi(2));
        let b1 = (2.0 * theta).sin() / (4.0 * r1.powi(2)) * ((r1 / r2).powi(2) - 1.0);
        let b2 = s.powi(2) / (2.0 * r1.powi(2)) + c.powi(2) / (2.0 * r2.powi(2));
        let h = (size / 2) as isize;
        for y in -h..=h {
            for x in -h..=h {
                let (xf, yf) = (x as f64, y as f64);
                let lit = (-(b0 * xf * xf + 2.0 * b1 * xf * yf + b2 * yf * yf)).exp();
                // rotated-axes form of the same Gaussian
                let u = xf * c - yf * s;
                let v = xf * s + yf * c;
                let rot = (-(u * u / (2.0 * r1 * r1) + v * v / (2.0 * r2 * r2))).exp();
                let got = taps[((y + h) as usize) * size + (x + h) as usize];
                worst = worst.max((got - lit).abs()).max((got - rot).abs());
            }
        }
        let k = make_gaussian_kernel(r1, r2, theta, size).map_err(|e| e.to_string())?;
        let sum: f64 = k.taps().iter().sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
    }
    let example = gaussian_taps_unnormalized(3.0, 2.0, 0.0, 5).map_err(|e| e.to_string())?[13];
    ensure!((example - (-1.0f64 / 18.0).exp()).abs() < 1e-12, "tap (1,0) = {example}");
    ensure!(worst < 1e-12, "max tap error {worst:e}");
    ensure!(worst_sum < 1e-9, "max |sum - 1| {worst_sum:e}");
    Ok(format!("20 random (r1, r2, theta): max tap error {worst:.1e}, max |sum - 1| {worst_sum:.1e}"))
}

fn c03_blend_endpoints() -> Outcome {
    let mut rng = RngStream::from_seed(303);
    let img = rand_image(&mut rng, 23, 17);
    let g = 1.7;
    let k = make_gaussian_kernel(2.0, 1.2, 0.0, 7).map_err(|e| e.to_string())?;
    let gained = img.map(|v| g * v);
    let blurred = brute_convolve(&gained, k.taps(), k.size());
    let lo = gain_denoise_sharpen(&img, g, &k, 1e-9).map_err(|e| e.to_string())?;
    let hi = gain_denoise_sharpen(&img, g, &k, 1.0 - 1e-9).map_err(|e| e.to_string())?;
    let (d0, d1) = (max_diff(&lo, &blurred), max_diff(&hi, &gained));
    ensure!(d0 < 1e-6, "sigma -> 0 differs from blur by {d0:e}");
    ensure!(d1 < 1e-6, "sigma -> 1 differs from gain by {d1:e}");
    Ok(format!("sigma -> 0 vs blur {d0:.1e}, sigma -> 1 vs gain {d1:.1e}"))
}

fn c04_white_balance() -> Outcome {
    let mut rng = RngStream::from_seed(404);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let img = LinearRgbImage::from_fn(16, 12, |_, _| [rng.uniform(); 3]);
        let rho = rng.uniform_range(1.0, 10.0);
        for mode in [WbMode::Multiply, WbMode::Reciprocal] {
            let (out, _) = sog_white_balance(&img, rho, mode).map_err(|e| e.to_string())?;
            worst = worst.max(max_diff(&out, &img));
        }
    }
    ensure!(worst <= 1e-12, "gray image changed by {worst:e}");
    let fixture = LinearRgbImage::filled(8, 8, [0.5, 0.25, 0.25]);
    let (_, gains) = sog_white_balance(&fixture, 1.0, WbMode::Multiply).map_err(|e| e.to_string())?;
    ensure!(gains == [1.5, 0.75, 0.75], "gains {gains:?}");
    Ok(format!("equal-channel max change {worst:.1e}; fixture gains {gains:?}"))
}

fn dense(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Dense {
    Dense { weights, bias }
}

fn c05_qal_forward() -> Outcome {
    let mut rng = RngStream::from_seed(505);
    let feature_dim = 5;
    let w = QalWeights {
        ffn_out: Dense::glorot(4, 1, &mut rng),
        ..QalWeights::init(3, feature_dim, 4, &mut rng)
    };
    let ffn = |v: &[f64]| -> f64 {
        let h: Vec<f64> = w.ffn_hidden.forward(v).into_iter().map(f64::tanh).collect();
        w.ffn_out.forward(&h)[0]
    };
    // one feature: every query attends fully to its value
    let x: Vec<f64> = (0..feature_dim).map(|_| rng.normal(0.0, 1.0)).collect();
    let out = qal_forward(std::slice::from_ref(&x), &w).map_err(|e| e.to_string())?;
    ensure!(out.len() == 3, "output length {}", out.len());
    let want = ffn(&w.value_proj.forward(&x));
    let e1 = out.iter().map(|o| (o - want).abs()).fold(0.0, f64::max);
    ensure!(e1 < 1e-12, "single-key error {e1:e}");
    // constant keys: uniform attention gives the mean value
    let flat = QalWeights {
        key_proj: dense(vec![vec![0.0; feature_dim]; 4], vec![0.3, -0.2, 0.1, 0.5]),
        ..w.clone()
    };
    let feats: Vec<Vec<f64>> = (0..6).map(|_| (0..feature_dim).map(|_| rng.normal(0.0, 1.0)).collect()).collect();
    let out = qal_forward(&feats, &flat).map_err(|e| e.to_string())?;
    let mut mean = vec![0.0; 4];
    for f in &feats {
        for (m, v) in mean.iter_mut().zip(flat.value_proj.forward(f)) {
            *m += v / feats.len() as f64;
        }
    }
    let want = ffn(&mean);
    let e2 = out.iter().map(|o| (o - want).abs()).fold(0.0, f64::max);
    ensure!(e2 < 1e-12, "uniform-attention error {e2:e}");
    // two features, identity projections, scores (ln 3, 0) -> weights (3/4, 1/4)
    let eye = || dense(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
    let hand = QalWeights {
        d_k: 2,
        queries: vec![vec![3.0f64.ln() * 2.0f64.sqrt(), 0.0]],
        key_proj: eye(),
        value_proj: eye(),
        ffn_hidden: eye(),
        ffn_out: dense(vec![vec![1.0, 1.0]], vec![0.0]),
        activation: Activation::Tanh,
    };
    let out = qal_forward(&[vec![1.0, 0.0], vec![0.0, 1.0]], &hand).map_err(|e| e.to_string())?;
    // tanh(0.75) + tanh(0.25)
    let e3 = (out[0] - 0.880_067_614_790_996_5).abs();
    ensure!(e3 < 1e-9, "2-feature example {} (error {e3:e})", out[0]);
    Ok(format!("single-key {e1:.1e}, uniform {e2:.1e}, 2-feature {e3:.1e}"))
}

fn act(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Tanh => x.tanh(),
        Activation::Sine => (30.0 * x).sin(),
        Activation::Gelu => 0.5 * x * (1.0 + ((2.0 / PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh()),
    }
}

fn nilut_oracle(w: &NilutWeights, rgb: [f64; 3]) -> [f64; 3] {
    let mut a: Vec<f64> = rgb.to_vec();
    let n = w.layers.len();
    for (i, layer) in w.layers.iter().enumerate() {
        let mut next = Vec::with_capacity(layer.bias.len());
        for (row, b) in layer.weights.iter().zip(&layer.bias) {
            // accumulate in reverse to differ from the library order
            let s: f64 = row.iter().zip(&a).rev().map(|(wi, ai)| wi * ai).sum::<f64>() + b;
            next.push(if i + 1 < n { act(w.activation, s) } else { s });
        }
        a = next;
    }
    [rgb[0] + a[0], rgb[1] + a[1], rgb[2] + a[2]]
}

fn c06_nilut() -> Outcome {
    let mut rng = RngStream::from_seed(606);
    let img = rand_image(&mut rng, 19, 11);
    for activation in [Activation::Tanh, Activation::Sine, Activation::Gelu] {
        let w = NilutWeights::with_random_hidden(&mut rng, activation);
        let out = nilut_forward(&img, &w).map_err(|e| e.to_string())?;
        ensure!(bits_equal(&out, &img), "{activation:?}: zero final layer is not the identity");
    }
    let mut worst: f64 = 0.0;
    for activation in [Activation::Tanh, Activation::Sine, Activation::Gelu] {
        let w = NilutWeights::random(&mut rng, activation, 0.1);
        let out = nilut_forward(&img, &w).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let (x, y) = (rng.int_range(0, 18) as usize, rng.int_range(0, 10) as usize);
            let want = nilut_oracle(&w, img.pixel(x, y));
            let got = out.pixel(x, y);
            for c in 0..3 {
                worst = worst.max((got[c] - want[c]).abs());
            }
        }
    }
    ensure!(worst < 1e-6, "max oracle error {worst:e}");
    Ok(format!("identity bit-exact for 3 activations; random-weights max error {worst:.1e}"))
}

fn c07_corruption_identity() -> Outcome {
    let mut rng = RngStream::from_seed(707);
    let x = rand_image(&mut rng, 40, 30);
    let depth = DepthMap::procedural(40, 30);
    let side = SideInputs {
        depth: Some(&depth),
        ..SideInputs::default()
    };
    let mut hashes = BTreeSet::new();
    for kind in CorruptionKind::ALL {
        let spec = CorruptionSpec::sampled(kind, 12345);
        let a = apply_corruption(&spec, &x, &side).map_err(|e| format!("{kind}: {e}"))?;
        let b = apply_corruption(&spec, &x, &side).map_err(|e| format!("{kind}: {e}"))?;
        ensure!(bits_equal(&a, &b), "{kind} is not reproducible");
        hashes.insert(a.content_hash());
    }
    ensure!(hashes.len() == 17, "only {} distinct outputs", hashes.len());

    let e = |r: rawbench_core::Result<LinearRgbImage>| r.map_err(|e| e.to_string());
    let zero = NoiseModel::zero();
    let r = || RngStream::from_seed(9);
    let black = LinearRgbImage::zeros(40, 30);
    let exact: Vec<(&str, LinearRgbImage)> = vec![
        ("relight l=1", e(corrupt_relight(&x, 1.0, &zero, &mut r()))?),
        ("low_flare l=1 F=0", e(corrupt_low_flare(&x, 1.0, &black, &zero, &mut r()))?),
        ("rain count=0", e(corrupt_rain(&x, &RainStreaks::none(), &mut r()))?),
        ("defocus radius=0", e(corrupt_defocus_blur(&x, 0.0))?),
        ("cmos rows=0 rate=0", e(corrupt_cmos_damage(&x, 0, 0.0, 1.0, &mut r()))?),
    ];
    let near: Vec<(&str, LinearRgbImage)> = vec![
        ("flare F=0 scale=0", e(corrupt_flare(&x, &black, 0.0, &mut r()))?),
        ("fog beta=0", e(corrupt_fog(&x, &depth, 0.7, 0.0))?),
        ("rain_fog count=0 beta=0", e(corrupt_rain_fog(&x, &RainStreaks::none(), &depth, 0.7, 0.0, &mut r()))?),
        (
            "snow z=0",
            e(corrupt_snow(&x, &SnowLayer::new(40, 30, vec![0.0; 1200], vec![1.0; 1200]).map_err(|e| e.to_string())?))?,
        ),
        ("motion length=1", e(corrupt_motion_blur(&x, 1.0, 0.3))?),
        ("sensor_noise zero", e(corrupt_sensor_noise(&x, &zero, None, &mut r()))?),
        ("moire alpha=0", e(corrupt_moire(&x, 0.2, 0.4, 0.0))?),
        ("vignetting strength=0", e(corrupt_vignetting(&x, 0.0, 0.5))?),
        ("chromatic k1=0", e(corrupt_chromatic_aberration(&x, [0.0; 3]))?),
        ("sensor_matrix I", e(apply_sensor_matrix(&x, &IDENTITY3))?),
    ];
    for (name, y) in &exact {
        ensure!(bits_equal(y, &x), "{name}: not bit-exact (max diff {:e})", max_diff(y, &x));
    }
    let mut worst: f64 = 0.0;
    for (name, y) in &near {
        let d = max_diff(y, &x);
        ensure!(d <= 1e-9, "{name}: max diff {d:e}");
        worst = worst.max(d);
    }
    Ok(format!(
        "17 kinds reproducible with 17 distinct hashes; {} exact and {} near identities (max {worst:.1e})",
        exact.len(),
        near.len()
    ))
}

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn c08_noise_statistics() -> Outcome {
    let t = Instant::now();
    let x = LinearRgbImage::filled(256, 256, [0.5; 3]);
    let n = (3 * x.len()) as f64;
    let mut report = Vec::new();

    let y = corrupt_relight(&x, 0.2, &NoiseModel::new(0.01, 0.02), &mut RngStream::from_seed(81)).map_err(|e| e.to_string())?;
    let resid: Vec<f64> = (0..3).flat_map(|c| y.plane(c).iter().map(|v| v - 0.1)).collect();
    let (m, v) = moments(&resid);
    let model = 0.01f64.powi(2) + 0.02 * 0.2 * 0.5;
    ensure!((v / model - 1.0).abs() <= 0.1, "low-light variance {v:e} vs {model:e}");
    ensure!(m.abs() <= 3.0 * model.sqrt() / n.sqrt(), "low-light mean {m:e}");
    report.push(format!("low-light var {v:.3e}/{model:.3e}"));

    for (dr, ds) in [(0.01, 0.0), (0.01, 0.02)] {
        let y = corrupt_sensor_noise(&x, &NoiseModel::new(dr, ds), None, &mut RngStream::from_seed(82)).map_err(|e| e.to_string())?;
        let resid: Vec<f64> = (0..3).flat_map(|c| y.plane(c).iter().map(|v| v - 0.5)).collect();
        let (m, v) = moments(&resid);
        let model = dr * dr + ds * 0.5;
        ensure!((v / model - 1.0).abs() <= 0.1, "sensor noise ({dr}, {ds}) variance {v:e} vs {model:e}");
        ensure!(m.abs() <= 3.0 * model.sqrt() / n.sqrt(), "sensor noise mean {m:e}");
        report.push(format!("sensor var {v:.3e}/{model:.3e}"));
    }

    let bound = quantization_bound(12);
    ensure!(bound == 1.0 / 8192.0, "bound {bound}");
    let y = corrupt_sensor_noise(&x, &NoiseModel::zero(), Some(12), &mut RngStream::from_seed(83)).map_err(|e| e.to_string())?;
    let q: Vec<f64> = (0..3).flat_map(|c| y.plane(c).iter().map(|v| v - 0.5)).collect();
    let qmax = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    ensure!(qmax <= bound, "quantization sample {qmax:e} exceeds {bound:e}");
    ensure!(qmax > 0.5 * bound, "quantization samples suspiciously small ({qmax:e})");
    let s = t.elapsed().as_secs_f64();
    ensure!(s < 10.0, "took {s:.2} s");
    report.push(format!("|quant| max {qmax:.3e} <= {bound:.3e}"));
    Ok(format!("{} over {} samples in {s:.2} s", report.join(", "), n as usize))
}

fn c09_fog_law() -> Outcome {
    let x = LinearRgbImage::filled(4, 3, [0.2; 3]);
    let d = DepthMap::new(4, 3, vec![LN_2; 12]).map_err(|e| e.to_string())?;
    let y = corrupt_fog(&x, &d, 0.6, 1.0).map_err(|e| e.to_string())?;
    let e = (0..3).flat_map(|c| y.plane(c).iter()).map(|v| (v - 0.4).abs()).fold(0.0, f64::max);
    ensure!(e <= 1e-12, "fixture error {e:e}");
    let mut rng = RngStream::from_seed(909);
    let mut checked = 0usize;
    for _ in 0..50 {
        let x = rand_image(&mut rng, 24, 16);
        let depth = DepthMap::new(24, 16, (0..384).map(|_| rng.uniform_range(0.0, 10.0)).collect()).map_err(|e| e.to_string())?;
        let a = rng.uniform();
        let beta = rng.uniform_range(0.0, 3.0);
        let y = corrupt_fog(&x, &depth, a, beta).map_err(|e| e.to_string())?;
        for c in 0..3 {
            for (xv, yv) in x.plane(c).iter().zip(y.plane(c)) {
                ensure!(
                    *yv >= xv.min(a) - 1e-9 && *yv <= xv.max(a) + 1e-9,
                    "y = {yv} outside [{}, {}]",
                    xv.min(a),
                    xv.max(a)
                );
                checked += 1;
            }
        }
    }
    Ok(format!("fixture error {e:.1e}; convex bound on {checked} samples"))
}

fn c10_augmentation_ranges() -> Outcome {
    const N: usize = 100_000;
    let cfg = AugmentConfig::default();
    let mut rng = RngStream::from_seed(1010);
    let mut dark = 0usize;
    for _ in 0..N {
        let s = sample_brightness(&cfg.brightness, &mut rng);
        ensure!((0.01..=5.0).contains(&s.omega), "omega {}", s.omega);
        dark += usize::from(s.dark);
    }
    let split = dark as f64 / N as f64;
    ensure!((split - 0.5).abs() <= 0.02, "dark fraction {split}");
    for _ in 0..N {
        let w = sample_chromaticity(&cfg.chroma, &mut rng);
        ensure!(w[0] + w[1] + w[2] == 3.0, "chromaticity sum {}", w[0] + w[1] + w[2]);
        ensure!((0.8..=1.2).contains(&w[1]), "omega_g {}", w[1]);
    }
    for _ in 0..N {
        let q = sample_quality(&cfg.quality, &mut rng);
        ensure!(q.noise_sigma <= 0.1 && q.noise_sigma >= 0.0, "noise sigma {}", q.noise_sigma);
        ensure!((7..=21).contains(&q.kernel_size) && q.kernel_size % 2 == 1, "kernel size {}", q.kernel_size);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for _ in 0..N {
        *counts.entry(sample_branch(&cfg.probabilities, &mut rng).as_str()).or_default() += 1;
    }
    ensure!(counts.len() == 4, "branches seen: {counts:?}");
    for (b, c) in &counts {
        let f = *c as f64 / N as f64;
        ensure!((f - 0.25).abs() <= 0.01, "branch {b} frequency {f}");
    }
    Ok(format!("1e5 draws each; dark split {split:.4}; branch counts {counts:?}"))
}

fn c11_metrics() -> Outcome {
    let cd = corruption_degradation(0.759, 0.749).map_err(|e| e.to_string())?;
    let rcd = relative_cd(0.759, 0.887, 0.749, 0.877).map_err(|e| e.to_string())?;
    ensure!((cd - 0.960).abs() <= 0.001, "CD {cd}");
    ensure!((rcd - 1.000).abs() <= 0.001, "rCD {rcd}");
    let records = vec![
        EvalRecord::new("baseline", "normal", 0.877),
        EvalRecord::new("baseline", "low_light", 0.749),
        EvalRecord::new("raw_adapter", "normal", 0.887),
        EvalRecord::new("raw_adapter", "low_light", 0.759),
    ];
    let report = build_report(&records, "baseline").map_err(|e| e.to_string())?;
    let cell = &report.methods["raw_adapter"].conditions["low_light"];
    ensure!(cell.cd.is_some_and(|v| (v - cd).abs() < 1e-15), "report CD {:?}", cell.cd);
    let tm = truncated_mean(&[0.9, 1.0, 1.1, 2.0, 0.1]).map_err(|e| e.to_string())?;
    ensure!(tm == 1.0, "truncated mean {tm:?}");
    Ok(format!("CD {cd:.4}, rCD {rcd:.4}, truncated mean {tm:?}"))
}

fn c12_parameter_recovery() -> Outcome {
    let mut rng = RngStream::from_seed(11);
    let rgb = LinearRgbImage::from_fn(64, 64, |x, y| {
        let t = ((x as f64 * 0.7).sin() * (y as f64 * 0.45).cos() + 1.0) * 0.5;
        let n = 0.1 * rng.uniform();
        [(0.5 * t + 0.1 + n).min(1.0), 0.3 * t + 0.2 + n, (0.2 + 0.2 * (1.0 - t) + n).min(1.0)]
    });
    let raw = mosaic(&rgb, CfaPattern::Rggb).map_err(|e| e.to_string())?;
    let truth = IspParams {
        g: 2.0,
        rho: 2.0,
        ..IspParams::default()
    };
    let target = develop(&raw, &truth, None).map_err(|e| e.to_string())?;
    let cfg = FitConfig {
        budget: 2000,
        seed: 7,
        ..FitConfig::default().fix_ccm()
    };
    let t = Instant::now();
    let (p, trace) = fit_isp_params(&raw, &target, &cfg).map_err(|e| e.to_string())?;
    let s = t.elapsed().as_secs_f64();
    let (_, again) = fit_isp_params(&raw, &target, &cfg).map_err(|e| e.to_string())?;
    let loss = trace.final_loss();
    ensure!(trace.len() <= 2000, "{} evaluations", trace.len());
    ensure!(loss < 1e-4, "loss {loss:e}");
    ensure!((p.g - 2.0).abs() < 0.05, "g = {}", p.g);
    ensure!(s < 60.0, "took {s:.1} s");
    ensure!(trace == again, "same-seed traces differ");
    Ok(format!(
        "loss {loss:.2e}, g = {:.6}, rho = {:.4}, {} evaluations in {s:.2} s; rerun trace identical",
        p.g,
        p.rho,
        trace.len()
    ))
}

fn c13_format_round_trips() -> Outcome {
    let mut rng = RngStream::from_seed(1313);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfas = [CfaPattern::Rggb, CfaPattern::Bggr, CfaPattern::Grbg, CfaPattern::Gbrg];
    for i in 0..50 {
        let (w, h) = (2 * rng.int_range(1, 12) as usize, 2 * rng.int_range(1, 12) as usize);
        let bit_depth = rng.int_range(8, 16) as u32;
        let max = (1u32 << bit_depth) - 1;
        let black = rng.int_range(0, (max / 8) as u64) as u32;
        let white = rng.int_range(u64::from(black) + 1, u64::from(max)) as u32;
        let meta = SensorMeta {
            bit_depth,
            black_level: black,
            white_level: white,
            sensor_name: format!("sensor-{i}"),
        };
        let codes: Vec<u16> = (0..w * h).map(|_| rng.int_range(u64::from(black), u64::from(white)) as u16).collect();
        let bayer = normalize_raw(&codes, w, h, meta.clone(), cfas[i % 4]).map_err(|e| e.to_string())?;
        let (pgm, side) = (dir.path().join(format!("r{i}.pgm")), dir.path().join(format!("r{i}.json")));
        io::write_raw(&bayer, &pgm, &side).map_err(|e| e.to_string())?;
        let back = io::read_raw(&pgm, &side).map_err(|e| e.to_string())?;
        ensure!(back == bayer, "RAW fixture {i}: decoded image differs");
        ensure!(denormalize_raw(&back) == codes, "RAW fixture {i}: codes differ");

        let img = LinearRgbImage::from_fn(w + 1, h, |_, _| [0, 1, 2].map(|_| rng.int_range(0, 65535) as f64 / 65535.0));
        let ppm = dir.path().join(format!("i{i}.ppm"));
        io::write_rgb(&img, &ppm, RgbMode::Linear16Ppm).map_err(|e| e.to_string())?;
        let back = io::read_rgb(&ppm).map_err(|e| e.to_string())?;
        ensure!(bits_equal(&back, &img), "RGB fixture {i}: max diff {:e}", max_diff(&back, &img));
        let bytes = std::fs::read(&ppm).map_err(|e| e.to_string())?;
        ensure!(io::encode_rgb(&back, RgbMode::Linear16Ppm).map_err(|e| e.to_string())? == bytes, "RGB fixture {i}: bytes differ");
    }

    let p = Path::new("m.pgm");
    let s = Path::new("m.json");
    let good = normalize_raw(&[0, 100, 200, 300], 2, 2, SensorMeta::default(), CfaPattern::Rggb).map_err(|e| e.to_string())?;
    let (bytes, text) = io::encode_raw(&good).map_err(|e| e.to_string())?;
    let code = |b: &[u8], t: &str| io::decode_raw(b, p, t, s).map(|_| ()).map_err(|e| e.code());
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    v.as_object_mut().expect("sidecar object").remove("white_level");
    let missing = code(&bytes, &v.to_string());
    let bad_maxval = code(b"P5\n2 2\n4095\n\0\0\0\0\0\0\0\0", &text);
    let odd = code(&[b"P5\n3 2\n65535\n".as_slice(), &[0u8; 12]].concat(), &text);
    ensure!(missing == Err("E_SIDECAR_FIELD"), "missing field -> {missing:?}");
    ensure!(bad_maxval == Err("E_PGM_MAXVAL"), "bad maxval -> {bad_maxval:?}");
    ensure!(odd == Err("E_ODD_DIMS"), "odd dims -> {odd:?}");
    Ok("50 RAW and 50 RGB fixtures round-trip; E_SIDECAR_FIELD, E_PGM_MAXVAL, E_ODD_DIMS".into())
}

fn c14_bench_replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut images = BTreeMap::new();
    images.insert("fixture".to_string(), ImageSource::Synthetic { width: 64, height: 64, seed: 14 });
    let manifest = BenchManifest::sweep(2024, images, Some(DepthSource::Procedural));
    ensure!(manifest.entries.len() == 17, "{} entries", manifest.entries.len());
    let mpath = dir.path().join("manifest.json");
    io::write_json(&manifest, &mpath).map_err(|e| e.to_string())?;
    let mut lists = Vec::new();
    for (i, jobs) in [1usize, 1, 8].into_iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let args = BenchArgs {
            manifest: mpath.clone(),
            hashes_only: false,
            image: ImageOut { mode: None, gamma: 2.2 },
            out: out.clone(),
        };
        cmd_bench(&args, jobs).map_err(|e| e.to_string())?;
        lists.push(std::fs::read_to_string(out.join("hashes.tsv")).map_err(|e| e.to_string())?);
    }
    ensure!(lists[0].lines().count() == 17, "{} hash lines", lists[0].lines().count());
    ensure!(lists[0] == lists[1], "two runs differ");
    ensure!(lists[0] == lists[2], "--jobs 1 and --jobs 8 differ");
    let distinct: BTreeSet<&str> = lists[0].lines().filter_map(|l| l.rsplit('\t').next()).collect();
    Ok(format!("17 entries, {} distinct hashes; identical across 2 runs and --jobs 1 vs 8", distinct.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("isp identity chain", c01_identity_chain),
        ("kernel math", c02_kernel_math),
        ("blend endpoints", c03_blend_endpoints),
        ("gray-image white balance", c04_white_balance),
        ("attention forward", c05_qal_forward),
        ("neural LUT", c06_nilut),
        ("corruption determinism and identity", c07_corruption_identity),
        ("noise statistics", c08_noise_statistics),
        ("fog law", c09_fog_law),
        ("augmentation ranges", c10_augmentation_ranges),
        ("metrics arithmetic", c11_metrics),
        ("parameter recovery", c12_parameter_recovery),
        ("format round-trips", c13_format_round_trips),
        ("end-to-end replay", c14_bench_replay),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match res {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
