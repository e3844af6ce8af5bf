//! Per-date inputs and labels for the prediction network.

use crate::error::{Error, Result};
use crate::fx_graph::{build_feature_graph, prediction_edge_set, scale_target, FeatureGraph, LookbackWindows, MarketHistory};
use crate::neural::GraphRef;
use crate::par::{self, Exec};

/// Everything needed to predict (and score a prediction for) date `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FxrpSample {
    pub t: usize,
    /// Features dated `t - 1`, built through the look-ahead guard.
    pub graph: FeatureGraph,
    /// Graph-edge indices whose link is in `U_t`.
    pub targets: Vec<usize>,
    /// `X_{t-1,ij}` per entry of `targets`.
    pub prev: Vec<f64>,
    /// `ln(X_t / X_{t-1})` per entry of `targets`; read after the features, outside the guard.
    pub labels: Vec<f64>,
}

impl FxrpSample {
    pub fn graph_ref(&self) -> GraphRef<'_> {
        GraphRef {
            n_nodes: self.graph.n_nodes,
            node_features: &self.graph.node_features,
            node_present: Some(&self.graph.node_present),
            edges: &self.graph.edges,
            edge_features: &self.graph.edge_features,
        }
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.targets.iter().map(|&e| self.graph.edges[e])
    }
}

/// Builds the sample for `t`, or `None` if no link of `U_t` has features.
pub fn build_sample(history: &MarketHistory, t: usize, windows: &LookbackWindows) -> Result<Option<FxrpSample>> {
    let view = history.view(t);
    let graph = match build_feature_graph(&view, windows) {
        Ok(g) => g,
        Err(Error::InsufficientHistory { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let u = prediction_edge_set(&view)?;
    let mut targets = Vec::new();
    let mut prev = Vec::new();
    for (e, &(i, j)) in graph.edges.iter().enumerate() {
        if !u.contains(i, j) {
            continue;
        }
        if let Some(x) = view.rate(t - 1, i, j)? {
            targets.push(e);
            prev.push(x);
        }
    }
    if targets.is_empty() {
        return Ok(None);
    }
    let labels = targets
        .iter()
        .zip(&prev)
        .map(|(&e, &p)| {
            let (i, j) = graph.edges[e];
            let x = history.rate(t, i, j).expect("U_t links are quoted at t");
            scale_target(x, p)
        })
        .collect();
    Ok(Some(FxrpSample {
        t,
        graph,
        targets,
        prev,
        labels,
    }))
}

/// Samples for every trading date, indexed by `t` (`None` where unusable).
#[derive(Debug, Clone, Default)]
pub struct FxrpData {
    samples: Vec<Option<FxrpSample>>,
    pub windows: LookbackWindows,
}

impl FxrpData {
    pub fn build(history: &MarketHistory, windows: &LookbackWindows, exec: Exec) -> Result<Self> {
        let n_days = history.n_days();
        let built = par::map_range(exec, n_days, |k| build_sample(history, k + 1, windows));
        let mut samples = vec![None];
        for s in built {
            samples.push(s?);
        }
        Ok(Self {
            samples,
            windows: windows.clone(),
        })
    }

    pub fn get(&self, t: usize) -> Option<&FxrpSample> {
        self.samples.get(t).and_then(|s| s.as_ref())
    }

    pub fn n_days(&self) -> usize {
        self.samples.len().saturating_sub(1)
    }

    pub fn collect(&self, dates: impl IntoIterator<Item = usize>) -> Vec<&FxrpSample> {
        dates.into_iter().filter_map(|t| self.get(t)).collect()
    }
}
