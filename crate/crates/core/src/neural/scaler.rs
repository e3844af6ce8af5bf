use serde::{Deserialize, Serialize};

use super::GraphRef;
use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-column standardization of node and edge features, plus a fixed
/// multiplier applied to the head output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaler {
    pub node_mean: Vec<f64>,
    pub node_std: Vec<f64>,
    pub edge_mean: Vec<f64>,
    pub edge_std: Vec<f64>,
    pub output_scale: f64,
    /// Columns whose std was below [`STD_FLOOR`]: `("node" | "edge", column)`.
    pub floored: Vec<(String, usize)>,
}

/// Streaming per-column mean and population variance (Welford).
#[derive(Debug, Clone)]
pub struct ScalerAccumulator {
    node: Moments,
    edge: Moments,
}

#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(width: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; width],
            m2: vec![0.0; width],
        }
    }

    fn add(&mut self, row: &[f64]) {
        self.count += 1;
        let k = self.count as f64;
        for c in 0..self.mean.len() {
            let d = row[c] - self.mean[c];
            self.mean[c] += d / k;
            self.m2[c] += d * (row[c] - self.mean[c]);
        }
    }

    fn finish(self) -> (Vec<f64>, Vec<f64>) {
        if self.count == 0 {
            let w = self.mean.len();
            return (vec![0.0; w], vec![1.0; w]);
        }
        let k = self.count as f64;
        let std = self.m2.iter().map(|v| (v / k).sqrt()).collect();
        (self.mean, std)
    }
}

impl ScalerAccumulator {
    pub fn new(node_in: usize, edge_in: usize) -> Self {
        Self {
            node: Moments::new(node_in),
            edge: Moments::new(edge_in),
        }
    }

    /// Adds the present nodes and all edges of `g`.
    pub fn add(&mut self, g: &GraphRef<'_>) -> Result<()> {
        let (wn, we) = (self.node.mean.len(), self.edge.mean.len());
        g.check(wn, we)?;
        for i in 0..g.n_nodes {
            if g.node_present.is_none_or(|p| p[i]) {
                self.node.add(&g.node_features[i * wn..(i + 1) * wn]);
            }
        }
        for r in g.edge_features.chunks_exact(we) {
            self.edge.add(r);
        }
        Ok(())
    }

    pub fn finish(self, output_scale: f64) -> Result<Scaler> {
        if !(output_scale.is_finite() && output_scale > 0.0) {
            return Err(Error::Config(format!("output scale {output_scale} must be positive")));
        }
        let (node_mean, node_std) = self.node.finish();
        let (edge_mean, edge_std) = self.edge.finish();
        let mut floored = Vec::new();
        for (kind, std) in [("node", &node_std), ("edge", &edge_std)] {
            floored.extend(std.iter().enumerate().filter(|(_, s)| **s < STD_FLOOR).map(|(c, _)| (kind.to_string(), c)));
        }
        Ok(Scaler {
            node_mean,
            node_std,
            edge_mean,
            edge_std,
            output_scale,
            floored,
        })
    }
}

impl Scaler {
    pub fn identity(node_in: usize, edge_in: usize) -> Self {
        Self {
            node_mean: vec![0.0; node_in],
            node_std: vec![1.0; node_in],
            edge_mean: vec![0.0; edge_in],
            edge_std: vec![1.0; edge_in],
            output_scale: 1.0,
            floored: Vec::new(),
        }
    }

    /// Fits column means and (population) standard deviations over the present
    /// nodes and all edges of `graphs`.
    pub fn fit(graphs: &[GraphRef<'_>], node_in: usize, edge_in: usize, output_scale: f64) -> Result<Self> {
        let mut acc = ScalerAccumulator::new(node_in, edge_in);
        for g in graphs {
            acc.add(g)?;
        }
        acc.finish(output_scale)
    }

    pub fn node_width(&self) -> usize {
        self.node_mean.len()
    }

    pub fn edge_width(&self) -> usize {
        self.edge_mean.len()
    }

    fn apply(mean: &[f64], std: &[f64], x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if !x.len().is_multiple_of(mean.len().max(1)) {
            return Err(Error::Dimension(format!(
                "feature block of length {} is not a multiple of width {}",
                x.len(),
                mean.len()
            )));
        }
        out.clear();
        out.extend(x.iter().enumerate().map(|(k, v)| {
            let c = k % mean.len();
            (v - mean[c]) / std[c].max(STD_FLOOR)
        }));
        Ok(())
    }

    fn invert(mean: &[f64], std: &[f64], z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(k, v)| {
                let c = k % mean.len();
                v * std[c].max(STD_FLOOR) + mean[c]
            })
            .collect()
    }

    /// `(x - mean) / max(std, 1e-8)` row-wise over a row-major node block.
    pub fn scale_nodes(&self, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        Self::apply(&self.node_mean, &self.node_std, x, out)
    }

    pub fn scale_edges(&self, x: &[f64], out: &mut Vec<f64>) -> Result<()> {
        Self::apply(&self.edge_mean, &self.edge_std, x, out)
    }

    pub fn unscale_nodes(&self, z: &[f64]) -> Vec<f64> {
        Self::invert(&self.node_mean, &self.node_std, z)
    }

    pub fn unscale_edges(&self, z: &[f64]) -> Vec<f64> {
        Self::invert(&self.edge_mean, &self.edge_std, z)
    }
}
