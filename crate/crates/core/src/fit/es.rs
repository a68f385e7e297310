//! Diagonal-covariance (μ/μ_w, λ) evolution strategy with cumulative
//! step-size adaptation. Offspring of one generation are evaluated in
//! parallel; ranking uses (loss, offspring index).

use super::{Evaluator, FitConfig};
use crate::error::Result;
use crate::rng::RngStream;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(super) fn run(ev: &mut Evaluator, u0: Vec<f64>, config: &FitConfig) -> Result<()> {
    let active = ev.problem.active();
    ev.eval(&u0)?;
    let n = active.len();
    if n == 0 {
        return Ok(());
    }
    let nf = n as f64;
    let lambda = config.population.unwrap_or(4 + (3.0 * nf.ln()).floor() as usize).max(2);
    let mu = lambda / 2;
    let raw_w: Vec<f64> = (0..mu).map(|i| ((mu as f64) + 0.5).ln() - ((i + 1) as f64).ln()).collect();
    let wsum: f64 = raw_w.iter().sum();
    let w: Vec<f64> = raw_w.iter().map(|v| v / wsum).collect();
    let mu_eff = 1.0 / w.iter().map(|v| v * v).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
    let sep = (nf + 2.0) / 3.0;
    let c1 = (sep * 2.0 / ((nf + 1.3).powi(2) + mu_eff)).min(1.0);
    let c_mu = (sep * 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff)).min(1.0 - c1);
    let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

    let mut rng = RngStream::from_seed(config.seed);
    let mut mean: Vec<f64> = active.iter().map(|&i| u0[i]).collect();
    let mut sigma = config.initial_step;
    let mut diag = vec![1.0f64; n];
    let mut p_sigma = vec![0.0; n];
    let mut p_c = vec![0.0; n];
    let embed = |y: &[f64], base: &[f64]| -> Vec<f64> {
        let mut u = base.to_vec();
        for (k, &i) in active.iter().enumerate() {
            u[i] = y[k];
        }
        u
    };
    let mut generation = 0u32;
    while ev.remaining() > 0 {
        let sd: Vec<f64> = diag.iter().map(|c| c.sqrt()).collect();
        let mut ys = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let y: Vec<f64> = (0..n)
                .map(|k| (mean[k] + sigma * sd[k] * rng.standard_normal()).clamp(0.0, 1.0))
                .collect();
            ys.push(y);
        }
        let us: Vec<Vec<f64>> = ys.iter().map(|y| embed(y, &u0)).collect();
        let losses = ev.eval_batch(&us)?;
        if losses.len() < lambda {
            break;
        }
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));

        let old = mean.clone();
        mean = (0..n).map(|k| (0..mu).map(|j| w[j] * ys[order[j]][k]).sum()).collect();
        let step: Vec<f64> = (0..n).map(|k| (mean[k] - old[k]) / sigma).collect();
        let a = (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        for k in 0..n {
            p_sigma[k] = (1.0 - c_sigma) * p_sigma[k] + a * step[k] / sd[k];
        }
        generation += 1;
        let ps_norm = norm(&p_sigma);
        let h_sigma = ps_norm / (1.0 - (1.0 - c_sigma).powi(2 * generation as i32)).sqrt()
            < (1.4 + 2.0 / (nf + 1.0)) * chi_n;
        let hs = if h_sigma { 1.0 } else { 0.0 };
        let b = (c_c * (2.0 - c_c) * mu_eff).sqrt();
        for k in 0..n {
            p_c[k] = (1.0 - c_c) * p_c[k] + hs * b * step[k];
            let rank_mu: f64 = (0..mu).map(|j| w[j] * ((ys[order[j]][k] - old[k]) / sigma).powi(2)).sum();
            diag[k] = (1.0 - c1 - c_mu) * diag[k]
                + c1 * (p_c[k] * p_c[k] + (1.0 - hs) * c_c * (2.0 - c_c) * diag[k])
                + c_mu * rank_mu;
            diag[k] = diag[k].max(1e-300);
        }
        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).exp();
        sigma = sigma.min(1.0);

        let spread = sigma * diag.iter().cloned().fold(0.0, f64::max).sqrt();
        if spread < config.min_step {
            break;
        }
    }
    Ok(())
}
