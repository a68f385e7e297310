//! Hooke–Jeeves pattern search: coordinate probes with per-axis steps,
//! followed by an extrapolating pattern move after each successful sweep.

use super::{Evaluator, FitConfig};
use crate::error::Result;

/// Probes `±step` along each active axis from `base`, keeping strict
/// improvements. Returns the new point and its loss.
fn explore(
    ev: &mut Evaluator,
    active: &[usize],
    steps: &[f64],
    mut base: Vec<f64>,
    mut f: f64,
) -> Result<(Vec<f64>, f64)> {
    for &i in active {
        for dir in [1.0, -1.0] {
            if ev.remaining() == 0 {
                return Ok((base, f));
            }
            let cand = (base[i] + dir * steps[i]).clamp(0.0, 1.0);
            if cand == base[i] {
                continue;
            }
            let mut trial = base.clone();
            trial[i] = cand;
            let ft = ev.eval(&trial)?;
            if ft < f {
                base = trial;
                f = ft;
                break;
            }
        }
    }
    Ok((base, f))
}

pub(super) fn run(ev: &mut Evaluator, u0: Vec<f64>, config: &FitConfig) -> Result<()> {
    let active = ev.problem.active();
    let mut steps = vec![config.initial_step; u0.len()];
    let mut base = u0;
    let mut f = ev.eval(&base)?;
    while ev.remaining() > 0 {
        let (next, fn_) = explore(ev, &active, &steps, base.clone(), f)?;
        if fn_ < f {
            // pattern moves while they keep paying off
            let (mut prev, mut cur, mut fcur) = (base, next, fn_);
            loop {
                if ev.remaining() == 0 {
                    break;
                }
                let jump: Vec<f64> = cur
                    .iter()
                    .zip(&prev)
                    .map(|(c, p)| (2.0 * c - p).clamp(0.0, 1.0))
                    .collect();
                let fj = ev.eval(&jump)?;
                let (probe, fp) = explore(ev, &active, &steps, jump, fj)?;
                if fp < fcur {
                    prev = cur;
                    cur = probe;
                    fcur = fp;
                } else {
                    break;
                }
            }
            base = cur;
            f = fcur;
        } else {
            let mut all_small = true;
            for &i in &active {
                steps[i] *= 0.5;
                all_small &= steps[i] < config.min_step;
            }
            if all_small {
                break;
            }
        }
        if active.is_empty() {
            break;
        }
    }
    Ok(())
}
