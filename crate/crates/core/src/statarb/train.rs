use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{build_statarb_graph, DayState, StatArbGraph, EPS_S};
use super::loss::{fxsa_loss, fxsa_loss_grad, BatchStats, EPS_VAR};
use super::plan::{gain_gradient_raw, h_so, TradePlan};
use crate::error::{Error, Result};
use crate::fx_graph::LookbackWindows;
use crate::neural::{
    select_best, width_for_budget, Adam, Architecture, GnnParams, GridResult, HeadInit, HyperGrid,
    OutputMode, ScalerAccumulator, TrainKnobs,
};
use crate::par::{self, Exec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FxsaConfig {
    pub grid: HyperGrid,
    pub knobs: TrainKnobs,
    pub windows: LookbackWindows,
    pub eps_s: f64,
    pub eps_var: f64,
}

impl Default for FxsaConfig {
    fn default() -> Self {
        Self {
            grid: HyperGrid::full(),
            knobs: TrainKnobs::default(),
            windows: LookbackWindows::default(),
            eps_s: EPS_S,
            eps_var: EPS_VAR,
        }
    }
}

impl FxsaConfig {
    pub fn validate(&self) -> Result<()> {
        self.knobs.validate()?;
        if !(self.eps_s > 0.0) || !(self.eps_var > 0.0) {
            return Err(Error::Config("eps_s and eps_var must be positive".into()));
        }
        Ok(())
    }
}

/// Second-stage state per trading date, indexed by `t`.
#[derive(Debug, Clone, Default)]
pub struct StateBook {
    states: Vec<Option<DayState>>,
}

impl StateBook {
    pub fn new(n_days: usize) -> Self {
        Self {
            states: vec![None; n_days + 2],
        }
    }

    pub fn insert(&mut self, state: DayState) {
        let t = state.t;
        if t >= self.states.len() {
            self.states.resize(t + 1, None);
        }
        self.states[t] = Some(state);
    }

    pub fn get(&self, t: usize) -> Option<&DayState> {
        self.states.get(t).and_then(|s| s.as_ref())
    }

    pub fn contains(&self, t: usize) -> bool {
        self.get(t).is_some()
    }

    /// Exchange graph for date `t` from the states at `t, t-1, ...`.
    pub fn graph(&self, t: usize, windows: &LookbackWindows, eps_s: f64) -> Result<StatArbGraph> {
        let window: Vec<Option<&DayState>> = (0..windows.max())
            .map(|b| if b < t { self.get(t - b) } else { None })
            .collect();
        build_statarb_graph(&window, windows, eps_s)
    }
}

/// A training or validation date with its gain coefficients `dG~/dw`.
#[derive(Debug, Clone, PartialEq)]
pub struct FxsaSample {
    pub t: usize,
    pub coef: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FxsaModel {
    pub params: GnnParams,
    pub val_loss: f64,
    pub table: Vec<GridResult>,
    pub best: usize,
}

/// Realized gain of the model's plan on `s`; `None` when it does not trade.
fn score_sample(params: &GnnParams, book: &StateBook, s: &FxsaSample, cfg: &FxsaConfig) -> Result<Option<f64>> {
    let state = book
        .get(s.t)
        .ok_or_else(|| Error::Precondition(format!("no second-stage state at t={}", s.t)))?;
    if state.links().is_empty() {
        return Ok(None);
    }
    let g = book.graph(s.t, &cfg.windows, cfg.eps_s)?;
    let u_raw = params.forward(&g.as_graph())?;
    let plan = h_so(&state.system, &u_raw)?;
    if plan.degenerate {
        return Ok(None);
    }
    Ok(Some(s.coef.iter().zip(&plan.w).map(|(c, w)| c * w).sum()))
}

/// Loss over `samples` as one batch; `None` when fewer than two dates trade.
pub fn evaluate_fxsa(params: &GnnParams, book: &StateBook, samples: &[FxsaSample], cfg: &FxsaConfig) -> Result<Option<f64>> {
    let mut gains = Vec::new();
    for s in samples {
        if let Some(gain) = score_sample(params, book, s, cfg)? {
            gains.push(gain);
        }
    }
    if gains.len() < 2 {
        return Ok(None);
    }
    Ok(Some(fxsa_loss(&BatchStats::new(gains)?, cfg.eps_var)))
}

/// Accumulates the batch-loss gradient into `grad`; `None` when fewer than two dates trade.
pub fn fxsa_batch_gradient(
    params: &GnnParams,
    book: &StateBook,
    batch: &[&FxsaSample],
    cfg: &FxsaConfig,
    grad: &mut [f64],
) -> Result<Option<f64>> {
    let mut kept = Vec::new();
    for s in batch {
        let state = book
            .get(s.t)
            .ok_or_else(|| Error::Precondition(format!("no second-stage state at t={}", s.t)))?;
        if state.links().is_empty() {
            continue;
        }
        let g = book.graph(s.t, &cfg.windows, cfg.eps_s)?;
        let (u_raw, tape) = params.forward_tape(&g.as_graph())?;
        let plan = h_so(&state.system, &u_raw)?;
        if plan.degenerate {
            continue;
        }
        let gain = s.coef.iter().zip(&plan.w).map(|(c, w)| c * w).sum::<f64>();
        kept.push((s, state, plan, gain, tape));
    }
    if kept.len() < 2 {
        return Ok(None);
    }
    let gains: Vec<f64> = kept.iter().map(|k| k.3).collect();
    let (loss, d_gain) = fxsa_loss_grad(&gains, cfg.eps_var)?;
    for ((s, state, plan, _, mut tape), dl) in kept.into_iter().zip(&d_gain) {
        let d_raw: Vec<f64> = gain_gradient_raw(&state.system, &plan, &s.coef)
            .into_iter()
            .map(|v| v * dl)
            .collect();
        tape.backward(params, &d_raw, grad)?;
    }
    Ok(Some(loss))
}

fn train_point(
    k: usize,
    idx: usize,
    budget: usize,
    layers: usize,
    scaler: &crate::neural::Scaler,
    book: &StateBook,
    train: &[FxsaSample],
    val: &[FxsaSample],
    cfg: &FxsaConfig,
    seed: u64,
) -> Result<(GnnParams, GridResult)> {
    let w = cfg.windows.len();
    let hidden = width_for_budget(budget, layers, w, w, OutputMode::Node)?;
    let arch = Architecture {
        node_in: w,
        edge_in: w,
        hidden,
        layers,
        mode: OutputMode::Node,
    };
    let point_seed = seed ^ ((k as u64) << 32) ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut params = GnnParams::init(arch, scaler.clone(), point_seed, HeadInit::Glorot)?;
    let mut opt = Adam::new(params.len(), cfg.knobs.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
    let score = |p: &GnnParams| -> Result<f64> { Ok(evaluate_fxsa(p, book, val, cfg)?.unwrap_or(f64::INFINITY)) };
    let mut best = params.clone();
    let mut best_score = score(&params)?;
    let mut since = 0;
    let mut epochs = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; params.len()];
    for _ in 0..cfg.knobs.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut steps = 0;
        for chunk in order.chunks(cfg.knobs.batch_size) {
            if cfg.knobs.max_steps_per_epoch.is_some_and(|m| steps >= m) {
                break;
            }
            let batch: Vec<&FxsaSample> = chunk.iter().map(|&i| &train[i]).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            if fxsa_batch_gradient(&params, book, &batch, cfg, &mut grad)?.is_some() {
                // A rejected (non-finite) step leaves the parameters untouched.
                let _ = opt.update(&mut params.theta, &grad);
                steps += 1;
            }
        }
        if steps == 0 {
            return Err(Error::Training(format!(
                "refit {k}: no mini-batch had two non-degenerate training dates"
            )));
        }
        let s = score(&params)?;
        if s < best_score {
            best_score = s;
            best = params.clone();
            since = 0;
        } else {
            since += 1;
            if since >= cfg.knobs.patience {
                break;
            }
        }
    }
    let result = GridResult {
        point: crate::neural::GridPoint { budget, layers },
        hidden,
        val_score: best_score,
        epochs,
    };
    Ok((best, result))
}

/// Trains the trading network for refit `k` on `train`, selecting over the grid by
/// validation loss.
pub fn train_fxsa(
    k: usize,
    book: &StateBook,
    train: &[FxsaSample],
    val: &[FxsaSample],
    cfg: &FxsaConfig,
    seed: u64,
    exec: Exec,
) -> Result<FxsaModel> {
    cfg.validate()?;
    let w = cfg.windows.len();
    let mut acc = ScalerAccumulator::new(w, w);
    let mut usable = 0;
    for s in train {
        let Some(state) = book.get(s.t) else { continue };
        if state.links().is_empty() {
            continue;
        }
        let g = book.graph(s.t, &cfg.windows, cfg.eps_s)?;
        acc.add(&g.as_graph())?;
        usable += 1;
    }
    if usable < 2 {
        return Err(Error::Training(format!(
            "refit {k}: {usable} evaluable training dates for the trading network"
        )));
    }
    let scaler = acc.finish(1.0)?;
    let points = cfg.grid.points().to_vec();
    let runs = par::map_range(exec, points.len(), |i| {
        train_point(k, i, points[i].budget, points[i].layers, &scaler, book, train, val, cfg, seed)
    });
    let mut params = Vec::new();
    let mut table = Vec::new();
    for r in runs {
        let (p, t) = r?;
        params.push(p);
        table.push(t);
    }
    let best = select_best(&table).expect("grid is non-empty");
    Ok(FxsaModel {
        params: params.swap_remove(best),
        val_loss: table[best].val_score,
        table,
        best,
    })
}

/// Trade plan for date `t`; degenerate (with a reason) when inputs are missing.
pub fn decide_trades(t: usize, params: &GnnParams, book: &StateBook, cfg: &FxsaConfig) -> Result<TradePlan> {
    let Some(state) = book.get(t) else {
        return Ok(TradePlan {
            t,
            links: Vec::new(),
            w: Vec::new(),
            u: Vec::new(),
            positive_sum: 0.0,
            degenerate: true,
            reason: Some("no predictions for this date".into()),
            cert: Default::default(),
        });
    };
    if state.links().is_empty() {
        return Ok(TradePlan::degenerate(t, state.links(), "no tradable links"));
    }
    let g = book.graph(t, &cfg.windows, cfg.eps_s)?;
    let u_raw = params.forward(&g.as_graph())?;
    Ok(h_so(&state.system, &u_raw)?.with_date(t))
}
