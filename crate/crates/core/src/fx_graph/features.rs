//! Temporal feature engineering for the prediction graph and target scaling.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::history::HistoryView;
use super::links::LinkSet;
use crate::error::{Error, Result};

/// Sorted, distinct look-back horizons in trading days.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LookbackWindows(Vec<usize>);

impl LookbackWindows {
    pub fn new(mut w: Vec<usize>) -> Result<Self> {
        w.sort_unstable();
        w.dedup();
        if w.is_empty() || w[0] == 0 {
            return Err(Error::Config("look-back windows must be non-empty and >= 1".into()));
        }
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> usize {
        *self.0.last().unwrap()
    }

    /// First decision date whose feature graph (dated `t - 1`) has full history.
    pub fn first_usable_date(&self) -> usize {
        self.max() + 2
    }
}

impl Default for LookbackWindows {
    fn default() -> Self {
        Self(vec![1, 3, 5, 10, 15, 20])
    }
}

impl TryFrom<Vec<usize>> for LookbackWindows {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LookbackWindows> for Vec<usize> {
    fn from(w: LookbackWindows) -> Self {
        w.0
    }
}

/// Graph fed to the prediction network, built from data through `date`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGraph {
    /// Feature date `s`; the graph serves the decision at `s + 1`.
    pub date: usize,
    pub n_nodes: usize,
    pub node_present: Vec<bool>,
    /// Row-major `n_nodes x 2|windows|`, `[y ; v]` per node.
    pub node_features: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    /// Row-major `edges x |windows|`.
    pub edge_features: Vec<f64>,
    /// Edge-window components whose tradable-date mask was empty (emitted as 0).
    pub empty_masks: usize,
}

impl FeatureGraph {
    pub fn node_width(&self) -> usize {
        self.node_features.len().checked_div(self.n_nodes).unwrap_or(0)
    }

    pub fn edge_width(&self) -> usize {
        if self.edges.is_empty() {
            0
        } else {
            self.edge_features.len() / self.edges.len()
        }
    }

    /// Debug line records `t,kind,i[,j],values...`.
    pub fn to_records(&self) -> String {
        let mut s = String::new();
        let nw = self.node_width();
        for i in 0..self.n_nodes {
            if !self.node_present[i] {
                continue;
            }
            let _ = write!(s, "{},node,{}", self.date, i);
            for v in &self.node_features[i * nw..(i + 1) * nw] {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        let ew = self.edge_width();
        for (k, (i, j)) in self.edges.iter().enumerate() {
            let _ = write!(s, "{},edge,{},{}", self.date, i, j);
            for v in &self.edge_features[k * ew..(k + 1) * ew] {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }
}

/// `x_{s,ij}`: average log-return of `(i, j)` over each window, using only
/// dates where the pair was mutually quoted on that day and the day before.
///
/// Returns the feature vector and the number of empty-mask components.
pub fn edge_momentum_features(
    view: &HistoryView<'_>,
    s: usize,
    i: usize,
    j: usize,
    windows: &LookbackWindows,
) -> Result<(Vec<f64>, usize)> {
    let mut out = Vec::with_capacity(windows.len());
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut span = 0usize;
    let mut empty = 0;
    for &w in windows.as_slice() {
        while span < w {
            let u = s - span;
            span += 1;
            if u < 1 {
                continue;
            }
            if view.links_ref(u)?.contains(i, j) && view.links_ref(u - 1)?.contains(i, j) {
                let now = view.log_rate(u, i, j)?.expect("link implies a quote");
                let before = view.log_rate(u - 1, i, j)?.expect("link implies a quote");
                sum += now - before;
                count += 1;
            }
        }
        if count == 0 {
            empty += 1;
            out.push(0.0);
        } else {
            out.push(sum / count as f64);
        }
    }
    Ok((out, empty))
}

/// `c_{s,i} = [y ; v]`: windowed average log-differences of `1 + Y` and of the
/// currency value. `None` when any needed observation is missing.
pub fn node_features(
    view: &HistoryView<'_>,
    s: usize,
    i: usize,
    windows: &LookbackWindows,
) -> Result<Option<Vec<f64>>> {
    let w_max = windows.max();
    if s < w_max + 1 {
        return Ok(None);
    }
    let mut y_steps = Vec::with_capacity(w_max);
    let mut v_steps = Vec::with_capacity(w_max);
    for back in 0..w_max {
        let u = s - back;
        let (Some(y1), Some(y0)) = (view.daily_ir(u, i)?, view.daily_ir(u - 1, i)?) else {
            return Ok(None);
        };
        let (Some(v1), Some(v0)) = (view.log_value(u, i)?, view.log_value(u - 1, i)?) else {
            return Ok(None);
        };
        y_steps.push(((1.0 + y1) / (1.0 + y0)).ln());
        v_steps.push(v1 - v0);
    }
    let avg = |steps: &[f64], w: usize| steps[..w].iter().sum::<f64>() / w as f64;
    let mut c: Vec<f64> = windows.as_slice().iter().map(|&w| avg(&y_steps, w)).collect();
    c.extend(windows.as_slice().iter().map(|&w| avg(&v_steps, w)));
    Ok(Some(c))
}

/// Builds the feature graph for the decision at `view.decision()`, i.e. the
/// graph dated `s = t - 1` on edges `L_s ∩ L_{s-1}`.
pub fn build_feature_graph(view: &HistoryView<'_>, windows: &LookbackWindows) -> Result<FeatureGraph> {
    let t = view.decision();
    if t < windows.first_usable_date() {
        return Err(Error::InsufficientHistory {
            first_usable: windows.first_usable_date(),
            requested: t,
        });
    }
    let s = t - 1;
    let n = view.n_currencies();
    let nw = 2 * windows.len();
    let mut node_present = vec![false; n];
    let mut node_feats = vec![0.0; n * nw];
    for i in 0..n {
        if let Some(c) = node_features(view, s, i, windows)? {
            node_present[i] = true;
            node_feats[i * nw..(i + 1) * nw].copy_from_slice(&c);
        }
    }
    let edge_set = view.links_ref(s)?.intersect(view.links_ref(s - 1)?);
    let mut edges = Vec::with_capacity(edge_set.len());
    let mut edge_feats = Vec::with_capacity(edge_set.len() * windows.len());
    let mut empty_masks = 0;
    for (i, j) in edge_set.iter() {
        if !(node_present[i] && node_present[j]) {
            continue;
        }
        let (x, empty) = edge_momentum_features(view, s, i, j, windows)?;
        empty_masks += empty;
        edges.push((i, j));
        edge_feats.extend(x);
    }
    Ok(FeatureGraph {
        date: s,
        n_nodes: n,
        node_present,
        node_features: node_feats,
        edges,
        edge_features: edge_feats,
        empty_masks,
    })
}

/// `U_t = L_t ∩ L_{t-1} ∩ L_{t-2}`.
pub fn prediction_edge_set(view: &HistoryView<'_>) -> Result<LinkSet> {
    let t = view.decision();
    if t < 2 {
        return Ok(LinkSet::empty(view.n_currencies()));
    }
    Ok(view
        .links_ref(t)?
        .intersect(view.links_ref(t - 1)?)
        .intersect(view.links_ref(t - 2)?))
}

/// Regression target: `log(x / previous)`.
#[inline]
pub fn scale_target(x: f64, previous: f64) -> f64 {
    (x / previous).ln()
}

/// Inverse of [`scale_target`]: `previous * exp(z)`.
#[inline]
pub fn unscale_prediction(z: f64, previous: f64) -> f64 {
    previous * z.exp()
}
