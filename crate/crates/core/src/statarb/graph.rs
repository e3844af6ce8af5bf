use std::fmt::Write as _;

use super::links::{tradable_links, TradableLinks};
use super::system::{build_constraints, symmetrize_predictions, ConstraintSystem};
use crate::error::{Error, Result};
use crate::fx_graph::{currency_values, CurrencyValues, LinkSet, LookbackWindows, RateMatrix};
use crate::neural::GraphRef;

/// Default threshold on `|P_ab|` for an edge of the exchange graph.
pub const EPS_S: f64 = 1e-8;

/// `alpha_ij = log X'_ij - log V_i + log V_j` per link, with `V` fitted on the predictions.
pub fn arbitrage_residuals(xp: &RateMatrix, links: &TradableLinks) -> (Vec<f64>, CurrencyValues) {
    let set = LinkSet::from_pairs(links.n_currencies(), links.links().iter().copied());
    let cv = currency_values(&set, |i, j| xp.at(i, j).ln());
    let alpha = links
        .links()
        .iter()
        .map(|&(i, j)| xp.at(i, j).ln() - cv.log_values[i] + cv.log_values[j])
        .collect();
    (alpha, cv)
}

/// Everything the second stage derives from one date's predictions.
#[derive(Debug, Clone)]
pub struct DayState {
    pub t: usize,
    pub system: ConstraintSystem,
    pub alpha: Vec<f64>,
}

impl DayState {
    /// `raw` holds the first-stage predictions on `U_t`; `quoted` is `E_t`.
    pub fn new(t: usize, raw: &RateMatrix, quoted: &LinkSet, home: usize) -> Self {
        let xp = symmetrize_predictions(raw);
        let u = LinkSet::from_pairs(xp.n(), xp.iter().map(|(i, j, _)| (i, j)));
        let links = tradable_links(&u, quoted, home);
        let system = build_constraints(&links, &xp);
        let (alpha, _) = arbitrage_residuals(&xp, &links);
        Self { t, system, alpha }
    }

    pub fn links(&self) -> &TradableLinks {
        &self.system.links
    }
}

/// Exchange-level graph fed to the trading network: one node per link of `U'_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatArbGraph {
    pub t: usize,
    pub nodes: Vec<(usize, usize)>,
    /// Row-major `nodes x |windows|`: window-averaged `alpha`.
    pub node_features: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
    /// Row-major `edges x |windows|`: window-averaged projector entries.
    pub edge_features: Vec<f64>,
    pub eps_s: f64,
    /// Feature components with no contributing date (emitted as 0).
    pub absent: usize,
}

impl StatArbGraph {
    pub fn as_graph(&self) -> GraphRef<'_> {
        GraphRef {
            n_nodes: self.nodes.len(),
            node_features: &self.node_features,
            node_present: None,
            edges: &self.edges,
            edge_features: &self.edge_features,
        }
    }

    pub fn to_records(&self) -> String {
        let w = if self.nodes.is_empty() { 0 } else { self.node_features.len() / self.nodes.len() };
        let mut s = String::new();
        for (a, (i, j)) in self.nodes.iter().enumerate() {
            let _ = write!(s, "{},node,{}-{}", self.t, i, j);
            for v in &self.node_features[a * w..(a + 1) * w] {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        for (k, (a, b)) in self.edges.iter().enumerate() {
            let _ = write!(s, "{},edge,{},{}", self.t, a, b);
            for v in &self.edge_features[k * w..(k + 1) * w] {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }
}

/// Builds the exchange graph for `states[0]` (date `t`). `states[b]` is the state
/// at trading date `t - b` if one exists; it must cover `windows.max()` dates.
///
/// A node's feature averages `alpha` over the window dates where that exchange
/// was tradable; an edge `(a, b)` exists when `|P_t[a, b]| > eps_s` (`a != b`)
/// and its feature averages `P[a, b]` over dates where both exchanges were tradable.
pub fn build_statarb_graph(states: &[Option<&DayState>], windows: &LookbackWindows, eps_s: f64) -> Result<StatArbGraph> {
    let current = states
        .first()
        .copied()
        .flatten()
        .ok_or_else(|| Error::Precondition("no state for the decision date".into()))?;
    if states.len() < windows.max() {
        return Err(Error::Precondition(format!(
            "{} states supplied, window needs {}",
            states.len(),
            windows.max()
        )));
    }
    if !(eps_s > 0.0) {
        return Err(Error::Config("eps_s must be positive".into()));
    }
    let nodes = current.links().links().to_vec();
    let d = nodes.len();
    let w = windows.len();
    let proj = &current.system.proj;
    let mut edges = Vec::new();
    for a in 0..d {
        for b in 0..d {
            if a != b && proj[(a, b)].abs() > eps_s {
                edges.push((a, b));
            }
        }
    }
    let m = edges.len();

    let mut node_sum = vec![0.0; d];
    let mut node_cnt = vec![0usize; d];
    let mut edge_sum = vec![0.0; m];
    let mut edge_cnt = vec![0usize; m];
    let mut node_features = vec![0.0; d * w];
    let mut edge_features = vec![0.0; m * w];
    let mut absent = 0;
    let mut span = 0;
    let mut map = vec![usize::MAX; d];
    for (slot, &win) in windows.as_slice().iter().enumerate() {
        while span < win {
            if let Some(s) = states[span] {
                for (a, &(i, j)) in nodes.iter().enumerate() {
                    map[a] = s.links().index_of(i, j).unwrap_or(usize::MAX);
                    if map[a] != usize::MAX {
                        node_sum[a] += s.alpha[map[a]];
                        node_cnt[a] += 1;
                    }
                }
                for (k, &(a, b)) in edges.iter().enumerate() {
                    if map[a] != usize::MAX && map[b] != usize::MAX {
                        edge_sum[k] += s.system.proj[(map[a], map[b])];
                        edge_cnt[k] += 1;
                    }
                }
            }
            span += 1;
        }
        for a in 0..d {
            if node_cnt[a] == 0 {
                absent += 1;
            } else {
                node_features[a * w + slot] = node_sum[a] / node_cnt[a] as f64;
            }
        }
        for k in 0..m {
            if edge_cnt[k] == 0 {
                absent += 1;
            } else {
                edge_features[k * w + slot] = edge_sum[k] / edge_cnt[k] as f64;
            }
        }
    }
    Ok(StatArbGraph {
        t: current.t,
        nodes,
        node_features,
        edges,
        edge_features,
        eps_s,
        absent,
    })
}
