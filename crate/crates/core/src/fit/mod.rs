//! Derivative-free fitting of ISP parameters to a target image.
//!
//! The search runs over the 14 unconstrained slots of
//! [`constrain_params`] (θ excluded), optionally extended by the three output
//! biases of the LUT network. Both optimizers work in box-normalized
//! coordinates `u = (x − lo) / (hi − lo)`; dimensions with `lo == hi` are
//! held fixed.

mod es;
mod pattern;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{pairwise_sum, LinearRgbImage};
use crate::isp::color::WbMode;
use crate::isp::develop::develop_demosaiced;
use crate::isp::params::{constrain_params, unconstrain_params, ConstrainMode, IspParams, RAW_PARAM_LEN, THETA_SLOT};
use crate::raw::{demosaic_bilinear, BayerImage};

/// Searched slots of the unconstrained vector.
pub const SEARCH_DIM: usize = RAW_PARAM_LEN - 1;
/// Extra dimensions when the LUT output offset is enabled.
pub const LUT_OFFSET_DIM: usize = 3;

pub const SEARCH_NAMES: [&str; SEARCH_DIM] = [
    "dg", "dr1", "dr2", "sigma_logit", "rho_raw", "ccm00", "ccm01", "ccm02", "ccm10", "ccm11", "ccm12", "ccm20",
    "ccm21", "ccm22",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    CoordinateSearch,
    #[default]
    EvolutionStrategy,
}

/// Mean absolute or mean squared difference over all samples.
pub fn image_loss(a: &LinearRgbImage, b: &LinearRgbImage, kind: LossKind) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch(format!(
            "loss between {}x{} and {}x{} images",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let mut terms = Vec::with_capacity(3 * a.len());
    for c in 0..3 {
        for (x, y) in a.plane(c).iter().zip(b.plane(c)) {
            let d = x - y;
            terms.push(match kind {
                LossKind::L1 => d.abs(),
                LossKind::L2 => d * d,
            });
        }
    }
    if terms.is_empty() {
        return Ok(0.0);
    }
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

fn default_bounds(mode: ConstrainMode) -> Vec<[f64; 2]> {
    let g0 = mode.gain_init();
    let mut b = vec![[-g0, 5.0], [-2.9, 5.0], [-1.9, 5.0], [-6.0, 6.0], [0.0, 7.0]];
    b.extend(std::iter::repeat([-1.0, 1.0]).take(9));
    b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub loss: LossKind,
    pub optimizer: Optimizer,
    /// Maximum number of develop() evaluations.
    pub budget: usize,
    pub mode: ConstrainMode,
    /// Per-slot `[lo, hi]` over the 14 searched slots, in unconstrained units.
    pub bounds: Vec<[f64; 2]>,
    /// Starting point over the 14 searched slots; zeros when absent.
    pub start: Option<Vec<f64>>,
    pub wb_mode: WbMode,
    /// Fixed denoise kernel size; `None` follows the radii.
    pub kernel_size: Option<usize>,
    /// Also fit the LUT output biases within `lut_offset_bound`.
    pub lut_offset: bool,
    pub lut_offset_bound: f64,
    /// Evolution strategy offspring count; `None` uses `4 + ⌊3 ln n⌋`.
    pub population: Option<usize>,
    /// Initial step as a fraction of each box width.
    pub initial_step: f64,
    /// Search stops once every step falls below this fraction.
    pub min_step: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::L1,
            optimizer: Optimizer::EvolutionStrategy,
            budget: 2000,
            mode: ConstrainMode::Normal,
            bounds: default_bounds(ConstrainMode::Normal),
            start: None,
            wb_mode: WbMode::Multiply,
            kernel_size: None,
            lut_offset: false,
            lut_offset_bound: 0.2,
            population: None,
            initial_step: 0.2,
            min_step: 1e-9,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn default_bounds(mode: ConstrainMode) -> Vec<[f64; 2]> {
        default_bounds(mode)
    }

    /// Pins the nine matrix slots to the identity. Overall gain and matrix
    /// scale are interchangeable under scale-invariant white balance, so
    /// this is needed to make `g` identifiable.
    pub fn fix_ccm(mut self) -> Self {
        for b in &mut self.bounds[5..] {
            *b = [0.0, 0.0];
        }
        self
    }

    fn full_bounds(&self) -> Vec<[f64; 2]> {
        let mut b = self.bounds.clone();
        if self.lut_offset {
            b.extend(std::iter::repeat([-self.lut_offset_bound, self.lut_offset_bound]).take(LUT_OFFSET_DIM));
        }
        b
    }

    pub fn dim(&self) -> usize {
        SEARCH_DIM + if self.lut_offset { LUT_OFFSET_DIM } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::param("budget", "must be >= 1"));
        }
        if self.bounds.len() != SEARCH_DIM {
            return Err(Error::InfeasibleBounds(format!(
                "expected {SEARCH_DIM} bounds, got {}",
                self.bounds.len()
            )));
        }
        if !(self.lut_offset_bound >= 0.0) || !self.lut_offset_bound.is_finite() {
            return Err(Error::InfeasibleBounds("lut_offset_bound must be finite and >= 0".into()));
        }
        let g0 = self.mode.gain_init();
        for (i, [lo, hi]) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InfeasibleBounds(format!("{}: [{lo}, {hi}]", SEARCH_NAMES[i])));
            }
            let floor = match i {
                0 => -g0,
                1 => 0.1 - crate::isp::params::R1_INIT,
                2 => 0.1 - crate::isp::params::R2_INIT,
                _ => f64::NEG_INFINITY,
            };
            if *lo < floor - 1e-12 {
                return Err(Error::InfeasibleBounds(format!(
                    "{}: lower bound {lo} is below the feasible floor {floor}",
                    SEARCH_NAMES[i]
                )));
            }
        }
        if let Some(s) = &self.start {
            if s.len() != SEARCH_DIM {
                return Err(Error::DimensionMismatch(format!("start has length {}, expected {SEARCH_DIM}", s.len())));
            }
            for (i, (v, [lo, hi])) in s.iter().zip(&self.bounds).enumerate() {
                if !(v >= lo && v <= hi) {
                    return Err(Error::InfeasibleBounds(format!(
                        "start {} = {v} is outside [{lo}, {hi}]",
                        SEARCH_NAMES[i]
                    )));
                }
            }
        }
        if let Some(k) = self.kernel_size {
            if k % 2 == 0 {
                return Err(Error::param("kernel_size", format!("must be odd, got {k}")));
            }
        }
        if let Some(p) = self.population {
            if p < 2 {
                return Err(Error::param("population", "must be >= 2"));
            }
        }
        if !(self.initial_step > 0.0 && self.initial_step <= 1.0) {
            return Err(Error::param("initial_step", "must lie in (0, 1]"));
        }
        if !(self.min_step > 0.0) {
            return Err(Error::param("min_step", "must be > 0"));
        }
        Ok(())
    }
}

/// One evaluation: index, searched vector (unconstrained units), loss and
/// best loss so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eval_index: usize,
    pub params: Vec<f64>,
    pub loss: f64,
    pub best_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitTrace {
    pub entries: Vec<TraceEntry>,
}

impl FitTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&TraceEntry> {
        self.entries
            .iter()
            .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.eval_index.cmp(&b.eval_index)))
    }

    pub fn final_loss(&self) -> f64 {
        self.entries.last().map_or(f64::INFINITY, |e| e.best_loss)
    }
}

/// Fixed demosaiced input and target; maps search vectors to losses.
#[derive(Debug, Clone)]
pub struct FitProblem {
    demosaiced: LinearRgbImage,
    target: LinearRgbImage,
    loss: LossKind,
    mode: ConstrainMode,
    wb_mode: WbMode,
    kernel_size: Option<usize>,
    lut_offset: bool,
    bounds: Vec<[f64; 2]>,
}

impl FitProblem {
    pub fn new(raw: &BayerImage, target: &LinearRgbImage, config: &FitConfig) -> Result<Self> {
        Self::from_demosaiced(demosaic_bilinear(raw), target, config)
    }

    pub fn from_demosaiced(demosaiced: LinearRgbImage, target: &LinearRgbImage, config: &FitConfig) -> Result<Self> {
        config.validate()?;
        if !demosaiced.same_dims(target) {
            return Err(Error::DimensionMismatch(format!(
                "target is {}x{}, demosaiced raw is {}x{}",
                target.width(),
                target.height(),
                demosaiced.width(),
                demosaiced.height()
            )));
        }
        Ok(Self {
            demosaiced,
            target: target.clone(),
            loss: config.loss,
            mode: config.mode,
            wb_mode: config.wb_mode,
            kernel_size: config.kernel_size,
            lut_offset: config.lut_offset,
            bounds: config.full_bounds(),
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    /// Parameters for a search vector.
    pub fn params(&self, x: &[f64]) -> Result<IspParams> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "search vector has length {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        let mut raw = [0.0; RAW_PARAM_LEN];
        raw[..THETA_SLOT].copy_from_slice(&x[..THETA_SLOT]);
        raw[THETA_SLOT + 1..].copy_from_slice(&x[THETA_SLOT..SEARCH_DIM]);
        let mut p = constrain_params(&raw, self.mode)?;
        p.wb_mode = self.wb_mode;
        if self.lut_offset {
            let out = p.lut.layers.last_mut().expect("lut has an output layer");
            out.bias.copy_from_slice(&x[SEARCH_DIM..]);
        }
        Ok(p)
    }

    pub fn develop(&self, x: &[f64]) -> Result<LinearRgbImage> {
        develop_demosaiced(&self.demosaiced, &self.params(x)?, self.kernel_size)
    }

    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        image_loss(&self.develop(x)?, &self.target, self.loss)
    }

    /// Search vector of `params` (θ dropped).
    pub fn search_vector(&self, params: &IspParams) -> Vec<f64> {
        let raw = unconstrain_params(params, self.mode);
        let mut x: Vec<f64> = raw[..THETA_SLOT].iter().chain(&raw[THETA_SLOT + 1..]).copied().collect();
        if self.lut_offset {
            x.extend_from_slice(&params.lut.layers.last().expect("lut has an output layer").bias);
        }
        x
    }

    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(v, [lo, hi])| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(v, [lo, hi])| if hi > lo { lo + v.clamp(0.0, 1.0) * (hi - lo) } else { *lo })
            .collect()
    }

    fn active(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.bounds[i][1] > self.bounds[i][0]).collect()
    }
}

/// Records every evaluation and enforces the budget.
pub(crate) struct Evaluator<'a> {
    problem: &'a FitProblem,
    budget: usize,
    trace: FitTrace,
    best: f64,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a FitProblem, budget: usize) -> Self {
        Self {
            problem,
            budget,
            trace: FitTrace::default(),
            best: f64::INFINITY,
        }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.budget - self.trace.len()
    }

    fn record(&mut self, x: Vec<f64>, loss: f64) {
        self.best = self.best.min(loss);
        let eval_index = self.trace.len();
        self.trace.entries.push(TraceEntry {
            eval_index,
            params: x,
            loss,
            best_loss: self.best,
        });
    }

    /// Evaluates one point given in unit coordinates.
    pub(crate) fn eval(&mut self, u: &[f64]) -> Result<f64> {
        let x = self.problem.from_unit(u);
        let loss = self.problem.loss(&x)?;
        self.record(x, loss);
        Ok(loss)
    }

    /// Evaluates a batch in parallel; results are recorded in batch order.
    /// The batch is truncated to the remaining budget.
    pub(crate) fn eval_batch(&mut self, us: &[Vec<f64>]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        let n = us.len().min(self.remaining());
        let xs: Vec<Vec<f64>> = us[..n].iter().map(|u| self.problem.from_unit(u)).collect();
        let problem = self.problem;
        let losses: Vec<Result<f64>> = xs.par_iter().map(|x| problem.loss(x)).collect();
        let mut out = Vec::with_capacity(n);
        for (x, l) in xs.into_iter().zip(losses) {
            let l = l?;
            self.record(x, l);
            out.push(l);
        }
        Ok(out)
    }
}

/// Result of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: IspParams,
    pub search_vector: Vec<f64>,
    pub loss: f64,
    pub trace: FitTrace,
}

/// Minimizes `image_loss(develop(raw, θ), target)` over the configured box.
pub fn fit_isp_params(raw: &BayerImage, target: &LinearRgbImage, config: &FitConfig) -> Result<(IspParams, FitTrace)> {
    let o = fit_problem(&FitProblem::new(raw, target, config)?, config)?;
    Ok((o.params, o.trace))
}

pub fn fit_problem(problem: &FitProblem, config: &FitConfig) -> Result<FitOutcome> {
    config.validate()?;
    let mut start = config.start.clone().unwrap_or_else(|| vec![0.0; SEARCH_DIM]);
    // out-of-box zeros (e.g. a pinned slot) move to the nearest bound
    for (v, [lo, hi]) in start.iter_mut().zip(&config.bounds) {
        *v = v.clamp(*lo, *hi);
    }
    if config.lut_offset {
        start.extend([0.0; LUT_OFFSET_DIM]);
    }
    let u0 = problem.to_unit(&start);
    let mut ev = Evaluator::new(problem, config.budget);
    match config.optimizer {
        Optimizer::CoordinateSearch => pattern::run(&mut ev, u0, config)?,
        Optimizer::EvolutionStrategy => es::run(&mut ev, u0, config)?,
    }
    let trace = ev.trace;
    let best = trace.best().expect("budget >= 1 gives at least one evaluation").clone();
    Ok(FitOutcome {
        params: problem.params(&best.params)?,
        search_vector: best.params,
        loss: best.loss,
        trace,
    })
}

/// Central difference of the loss along slot `index` of the search vector.
pub fn finite_difference_sensitivity(problem: &FitProblem, x: &[f64], index: usize, step: f64) -> Result<f64> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::param("step", format!("must be finite and > 0, got {step}")));
    }
    if index >= problem.dim() {
        return Err(Error::param("index", format!("{index} is out of range for {} slots", problem.dim())));
    }
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch(format!("vector has length {}, expected {}", x.len(), problem.dim())));
    }
    let [lo, hi] = problem.bounds[index];
    let (a, b) = (x[index] - step, x[index] + step);
    if a < lo || b > hi {
        return Err(Error::OutOfRange {
            field: format!("x[{index}] ± step"),
            value: if a < lo { a } else { b },
            lo,
            hi,
        });
    }
    let mut xp = x.to_vec();
    xp[index] = b;
    let mut xm = x.to_vec();
    xm[index] = a;
    Ok((problem.loss(&xp)? - problem.loss(&xm)?) / (2.0 * step))
}
