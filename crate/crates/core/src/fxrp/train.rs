//! Mean-squared-error training of the prediction network and its grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{FxrpData, FxrpSample};
use super::schedule::Split;
use crate::error::{Error, Result};
use crate::fx_graph::{unscale_prediction, LookbackWindows, RateMatrix};
use crate::neural::{
    select_best, width_for_budget, Adam, Architecture, GnnParams, GridPoint, GridResult, HeadInit, HyperGrid,
    OutputMode, ScalerAccumulator, TrainKnobs, STD_FLOOR,
};
use crate::par::{self, Exec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FxrpConfig {
    pub grid: HyperGrid,
    pub knobs: TrainKnobs,
    pub windows: LookbackWindows,
}

impl Default for FxrpConfig {
    fn default() -> Self {
        Self {
            grid: HyperGrid::full(),
            knobs: TrainKnobs::default(),
            windows: LookbackWindows::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FxrpModel {
    pub k: usize,
    pub params: GnnParams,
    pub val_mse: f64,
    pub table: Vec<GridResult>,
    pub best: usize,
    /// Training loss after each epoch of the selected grid point.
    pub train_curve: Vec<f64>,
}

/// Pooled squared error and target count over `samples`.
fn sum_squared_error(params: &GnnParams, samples: &[&FxrpSample]) -> Result<(f64, usize)> {
    let mut sse = 0.0;
    let mut count = 0;
    for s in samples {
        let out = params.forward(&s.graph_ref())?;
        for (&e, &z) in s.targets.iter().zip(&s.labels) {
            let r = out[e] - z;
            sse += r * r;
        }
        count += s.targets.len();
    }
    Ok((sse, count))
}

/// Mean squared error of the scaled log-rate predictions, pooled over all target links.
pub fn evaluate_mse(params: &GnnParams, samples: &[&FxrpSample]) -> Result<f64> {
    let (sse, count) = sum_squared_error(params, samples)?;
    if count == 0 {
        return Err(Error::Training("no targets to evaluate".into()));
    }
    Ok(sse / count as f64)
}

/// Same measure for the random walk, whose scaled prediction is 0.
pub fn random_walk_mse(samples: &[&FxrpSample]) -> Result<f64> {
    let (sse, count) = samples
        .iter()
        .fold((0.0, 0), |(s, c), x| (s + x.labels.iter().map(|z| z * z).sum::<f64>(), c + x.labels.len()));
    if count == 0 {
        return Err(Error::Training("no targets to evaluate".into()));
    }
    Ok(sse / count as f64)
}

/// Accumulates the gradient of the pooled batch MSE; returns the batch loss.
pub fn mse_batch_gradient(params: &GnnParams, batch: &[&FxrpSample], grad: &mut [f64]) -> Result<f64> {
    let count: usize = batch.iter().map(|s| s.targets.len()).sum();
    if count == 0 {
        return Ok(0.0);
    }
    let norm = 1.0 / count as f64;
    let mut loss = 0.0;
    for s in batch {
        let g = s.graph_ref();
        let (out, mut tape) = params.forward_tape(&g)?;
        let mut d_out = vec![0.0; out.len()];
        for (&e, &z) in s.targets.iter().zip(&s.labels) {
            let r = out[e] - z;
            loss += r * r * norm;
            d_out[e] = 2.0 * r * norm;
        }
        tape.backward(params, &d_out, grad)?;
    }
    Ok(loss)
}

fn point_seed(seed: u64, k: usize, idx: usize) -> u64 {
    seed ^ ((k as u64) << 40) ^ (idx as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn train_point(
    k: usize,
    idx: usize,
    point: GridPoint,
    scaler: &crate::neural::Scaler,
    train: &[&FxrpSample],
    val: &[&FxrpSample],
    cfg: &FxrpConfig,
    seed: u64,
) -> Result<(GnnParams, GridResult, Vec<f64>)> {
    let wn = 2 * cfg.windows.len();
    let we = cfg.windows.len();
    let hidden = width_for_budget(point.budget, point.layers, wn, we, OutputMode::Edge)?;
    let arch = Architecture {
        node_in: wn,
        edge_in: we,
        hidden,
        layers: point.layers,
        mode: OutputMode::Edge,
    };
    let s = point_seed(seed, k, idx);
    // A zero head starts every grid point at the random walk.
    let mut params = GnnParams::init(arch, scaler.clone(), s, HeadInit::Zero)?;
    let mut opt = Adam::new(params.len(), cfg.knobs.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let mut best = params.clone();
    let mut best_score = evaluate_mse(&params, val)?;
    let mut since = 0;
    let mut epochs = 0;
    let mut curve = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; params.len()];
    for _ in 0..cfg.knobs.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut steps = 0;
        for chunk in order.chunks(cfg.knobs.batch_size) {
            if cfg.knobs.max_steps_per_epoch.is_some_and(|m| steps >= m) {
                break;
            }
            let batch: Vec<&FxrpSample> = chunk.iter().map(|&i| train[i]).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            epoch_loss += mse_batch_gradient(&params, &batch, &mut grad)?;
            let _ = opt.update(&mut params.theta, &grad);
            steps += 1;
        }
        curve.push(epoch_loss / steps.max(1) as f64);
        let score = evaluate_mse(&params, val)?;
        if score < best_score {
            best_score = score;
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
        point,
        hidden,
        val_score: best_score,
        epochs,
    };
    Ok((best, result, curve))
}

/// Trains the prediction network for refit `k` over the grid and keeps the
/// point with the lowest validation MSE.
pub fn train_fxrp(k: usize, data: &FxrpData, split: &Split, cfg: &FxrpConfig, seed: u64, exec: Exec) -> Result<FxrpModel> {
    cfg.knobs.validate()?;
    if cfg.windows != data.windows {
        return Err(Error::Config("look-back windows differ from the prepared data".into()));
    }
    let train = data.collect(split.train_dates());
    let val = data.collect(split.val_dates());
    if train.is_empty() {
        return Err(Error::Training(format!("refit {k}: no usable training dates")));
    }
    if val.is_empty() {
        return Err(Error::Training(format!("refit {k}: no usable validation dates")));
    }
    let wn = 2 * cfg.windows.len();
    let we = cfg.windows.len();
    let mut acc = ScalerAccumulator::new(wn, we);
    let mut n = 0usize;
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for s in &train {
        acc.add(&s.graph_ref())?;
        for z in &s.labels {
            n += 1;
            sum += z;
            sumsq += z * z;
        }
    }
    let mean = sum / n as f64;
    let target_std = (sumsq / n as f64 - mean * mean).max(0.0).sqrt().max(STD_FLOOR);
    let scaler = acc.finish(target_std)?;

    let points = cfg.grid.points().to_vec();
    let runs = par::map_range(exec, points.len(), |i| train_point(k, i, points[i], &scaler, &train, &val, cfg, seed));
    let mut fitted = Vec::new();
    let mut table = Vec::new();
    for r in runs {
        let (p, t, c) = r.map_err(|e| e.at(k, split.train.first().map_or(0, |r| r.start)))?;
        fitted.push((p, c));
        table.push(t);
    }
    let best = select_best(&table).expect("grid is non-empty");
    let (params, train_curve) = fitted.swap_remove(best);
    Ok(FxrpModel {
        k,
        params,
        val_mse: table[best].val_score,
        table,
        best,
        train_curve,
    })
}

/// `X_hat_tij = X_{t-1,ij} exp(g(features))` for every link of `U_t` with features.
pub fn predict(params: &GnnParams, sample: &FxrpSample) -> Result<Vec<(usize, usize, f64)>> {
    let out = params.forward(&sample.graph_ref())?;
    Ok(sample
        .targets
        .iter()
        .zip(&sample.prev)
        .map(|(&e, &p)| {
            let (i, j) = sample.graph.edges[e];
            (i, j, unscale_prediction(out[e], p))
        })
        .collect())
}

/// The random-walk forecast `X_hat_tij = X_{t-1,ij}` on the same links.
pub fn baseline_random_walk(sample: &FxrpSample) -> Vec<(usize, usize, f64)> {
    sample
        .links()
        .zip(&sample.prev)
        .map(|((i, j), &p)| (i, j, p))
        .collect()
}

pub fn to_rate_matrix(n: usize, entries: &[(usize, usize, f64)]) -> RateMatrix {
    let mut m = RateMatrix::new(n);
    for &(i, j, x) in entries {
        m.set(i, j, x);
    }
    m
}
