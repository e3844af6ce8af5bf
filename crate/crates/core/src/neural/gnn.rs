use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::arch::{Architecture, Layout, OutputMode, SlpLayout};
use super::scaler::Scaler;
use crate::error::{Error, Result};

/// Negative slope of the hidden activations.
pub const LEAKY_SLOPE: f64 = 0.01;

#[inline]
fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

/// Derivative of [`leaky`]; at exactly 0 the negative slope is used.
#[inline]
fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Borrowed directed graph with row-major node and edge feature blocks.
#[derive(Debug, Clone, Copy)]
pub struct GraphRef<'a> {
    pub n_nodes: usize,
    pub node_features: &'a [f64],
    /// Nodes with `false` are ignored when fitting a scaler.
    pub node_present: Option<&'a [bool]>,
    pub edges: &'a [(usize, usize)],
    pub edge_features: &'a [f64],
}

impl GraphRef<'_> {
    pub fn check(&self, node_in: usize, edge_in: usize) -> Result<()> {
        if self.node_features.len() != self.n_nodes * node_in {
            return Err(Error::Dimension(format!(
                "node block has {} values, expected {} x {}",
                self.node_features.len(),
                self.n_nodes,
                node_in
            )));
        }
        if self.edge_features.len() != self.edges.len() * edge_in {
            return Err(Error::Dimension(format!(
                "edge block has {} values, expected {} x {}",
                self.edge_features.len(),
                self.edges.len(),
                edge_in
            )));
        }
        if let Some(&(i, j)) = self.edges.iter().find(|(i, j)| *i >= self.n_nodes || *j >= self.n_nodes) {
            return Err(Error::Dimension(format!("edge ({i}, {j}) outside {} nodes", self.n_nodes)));
        }
        if self.node_present.is_some_and(|p| p.len() != self.n_nodes) {
            return Err(Error::Dimension("node mask length mismatch".into()));
        }
        Ok(())
    }

    pub fn output_len(&self, mode: OutputMode) -> usize {
        match mode {
            OutputMode::Edge => self.edges.len(),
            OutputMode::Node => self.n_nodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadInit {
    Glorot,
    /// Head weights and bias start at 0, so the initial output is identically 0.
    Zero,
}

/// `out[r] += sum_c W[r, off + c] * x[c]`
#[inline]
fn block_mv(th: &[f64], s: &SlpLayout, off: usize, x: &[f64], out: &mut [f64]) {
    let width = x.len();
    for (r, o) in out.iter_mut().enumerate().take(s.rows) {
        let row = &th[s.w + r * s.cols + off..s.w + r * s.cols + off + width];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out[c] += sum_r W[r, off + c] * d[r]`
#[inline]
fn block_mtv(th: &[f64], s: &SlpLayout, off: usize, d: &[f64], out: &mut [f64]) {
    let width = out.len();
    for (r, &dr) in d.iter().enumerate() {
        if dr == 0.0 {
            continue;
        }
        let row = &th[s.w + r * s.cols + off..s.w + r * s.cols + off + width];
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * dr;
        }
    }
}

/// `dW[r, off + c] += d[r] * x[c]`
#[inline]
fn block_outer(grad: &mut [f64], s: &SlpLayout, off: usize, d: &[f64], x: &[f64]) {
    let width = x.len();
    for (r, &dr) in d.iter().enumerate() {
        if dr == 0.0 {
            continue;
        }
        let row = &mut grad[s.w + r * s.cols + off..s.w + r * s.cols + off + width];
        for (g, xv) in row.iter_mut().zip(x) {
            *g += dr * xv;
        }
    }
}

/// Row `k` of a row-major block of width `w`.
#[inline]
fn row(v: &[f64], k: usize, w: usize) -> &[f64] {
    &v[k * w..(k + 1) * w]
}

#[inline]
fn row_mut(v: &mut [f64], k: usize, w: usize) -> &mut [f64] {
    &mut v[k * w..(k + 1) * w]
}

/// Per-node projections `W_a n_i` and `W_c n_i` of an SLP whose input is
/// `[n_i ; e ; n_j]` with node width `wn` and edge width `we`.
fn endpoint_projections(th: &[f64], s: &SlpLayout, nodes: &[f64], n: usize, wn: usize, we: usize) -> (Vec<f64>, Vec<f64>) {
    let h = s.rows;
    let mut a = vec![0.0; n * h];
    let mut c = vec![0.0; n * h];
    for i in 0..n {
        let x = row(nodes, i, wn);
        block_mv(th, s, 0, x, row_mut(&mut a, i, h));
        block_mv(th, s, wn + we, x, row_mut(&mut c, i, h));
    }
    (a, c)
}

struct LayerRecord {
    n_in: Vec<f64>,
    wn: usize,
    e_in: Vec<f64>,
    we: usize,
    node_pre: Vec<f64>,
    n_out: Vec<f64>,
    edge_pre: Option<Vec<f64>>,
}

/// Activations recorded by [`GnnParams::forward_tape`]; consumed by one backward pass.
pub struct Tape {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    inv_deg: Vec<f64>,
    layers: Vec<LayerRecord>,
    head_in: Vec<f64>,
    mode: OutputMode,
    param_len: usize,
    consumed: bool,
}

/// Network parameters: architecture, frozen feature scaler and flat weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnnParams {
    pub arch: Architecture,
    pub scaler: Scaler,
    pub seed: u64,
    pub theta: Vec<f64>,
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    version: u32,
    params: GnnParams,
}

impl GnnParams {
    /// Glorot-uniform weights, zero biases, seeded.
    pub fn init(arch: Architecture, scaler: Scaler, seed: u64, head: HeadInit) -> Result<Self> {
        arch.validate()?;
        if scaler.node_width() != arch.node_in || scaler.edge_width() != arch.edge_in {
            return Err(Error::Dimension("scaler widths do not match architecture".into()));
        }
        let lay = arch.layout();
        let mut theta = vec![0.0; lay.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |s: &SlpLayout, theta: &mut [f64]| {
            let a = (6.0 / (s.rows + s.cols) as f64).sqrt();
            for w in &mut theta[s.w..s.b] {
                *w = rng.random_range(-a..a);
            }
        };
        for l in 0..arch.layers {
            fill(&lay.node[l], &mut theta);
            if let Some(e) = &lay.edge[l] {
                fill(e, &mut theta);
            }
        }
        if head == HeadInit::Glorot {
            fill(&lay.head, &mut theta);
        }
        Ok(Self {
            arch,
            scaler,
            seed,
            theta,
        })
    }

    pub fn zeros(arch: Architecture, scaler: Scaler) -> Self {
        let n = arch.param_count();
        Self {
            arch,
            scaler,
            seed: 0,
            theta: vec![0.0; n],
        }
    }

    pub fn layout(&self) -> Layout {
        self.arch.layout()
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Per-edge (edge mode) or per-node (node mode) scalar outputs.
    pub fn forward(&self, g: &GraphRef<'_>) -> Result<Vec<f64>> {
        self.run(g, false).map(|(y, _)| y)
    }

    pub fn forward_tape(&self, g: &GraphRef<'_>) -> Result<(Vec<f64>, Tape)> {
        self.run(g, true).map(|(y, t)| (y, t.expect("tape requested")))
    }

    fn run(&self, g: &GraphRef<'_>, record: bool) -> Result<(Vec<f64>, Option<Tape>)> {
        let arch = &self.arch;
        g.check(arch.node_in, arch.edge_in)?;
        if self.theta.len() != arch.param_count() {
            return Err(Error::Dimension("parameter vector does not match architecture".into()));
        }
        let th = &self.theta;
        let lay = arch.layout();
        let n = g.n_nodes;
        let m = g.edges.len();
        let h = arch.hidden;

        let mut deg = vec![0usize; n];
        for &(_, i) in g.edges {
            deg[i] += 1;
        }
        let inv_deg: Vec<f64> = deg.iter().map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 }).collect();

        let mut nodes = Vec::new();
        self.scaler.scale_nodes(g.node_features, &mut nodes)?;
        let mut edges = Vec::new();
        self.scaler.scale_edges(g.edge_features, &mut edges)?;

        let mut records = Vec::new();
        for l in 0..arch.layers {
            let (wn, we) = arch.widths_at(l);
            let s = &lay.node[l];
            let (a, c) = endpoint_projections(th, s, &nodes, n, wn, we);
            let mut node_pre = vec![0.0; m * h];
            let mut n_out = vec![0.0; n * h];
            for (k, &(j, i)) in g.edges.iter().enumerate() {
                let pre = row_mut(&mut node_pre, k, h);
                pre.copy_from_slice(&th[s.b..s.b + h]);
                block_mv(th, s, wn, row(&edges, k, we), pre);
                let (ai, cj) = (row(&a, i, h), row(&c, j, h));
                let out = row_mut(&mut n_out, i, h);
                for r in 0..h {
                    pre[r] += ai[r] + cj[r];
                    out[r] += leaky(pre[r]) * inv_deg[i];
                }
            }
            let mut edge_pre = None;
            let mut e_out = Vec::new();
            if let Some(s) = &lay.edge[l] {
                let (a, c) = endpoint_projections(th, s, &n_out, n, h, we);
                let mut pre_all = vec![0.0; m * h];
                e_out = vec![0.0; m * h];
                for (k, &(i, j)) in g.edges.iter().enumerate() {
                    let pre = row_mut(&mut pre_all, k, h);
                    pre.copy_from_slice(&th[s.b..s.b + h]);
                    block_mv(th, s, h, row(&edges, k, we), pre);
                    let (ai, cj) = (row(&a, i, h), row(&c, j, h));
                    let out = row_mut(&mut e_out, k, h);
                    for r in 0..h {
                        pre[r] += ai[r] + cj[r];
                        out[r] = leaky(pre[r]);
                    }
                }
                edge_pre = Some(pre_all);
            }
            let e_in = std::mem::replace(&mut edges, e_out);
            let n_in = std::mem::replace(&mut nodes, n_out);
            if record {
                records.push(LayerRecord {
                    n_in,
                    wn,
                    e_in,
                    we,
                    node_pre,
                    n_out: nodes.clone(),
                    edge_pre,
                });
            }
        }

        let head_in = match arch.mode {
            OutputMode::Edge => edges,
            OutputMode::Node => nodes,
        };
        let rows = head_in.len() / h;
        let scale = self.scaler.output_scale;
        let hw = &th[lay.head.w..lay.head.w + h];
        let hb = th[lay.head.b];
        let out: Vec<f64> = (0..rows)
            .map(|k| scale * (hb + row(&head_in, k, h).iter().zip(hw).map(|(x, w)| x * w).sum::<f64>()))
            .collect();
        let tape = record.then(|| Tape {
            n_nodes: n,
            edges: g.edges.to_vec(),
            inv_deg,
            layers: records,
            head_in,
            mode: arch.mode,
            param_len: th.len(),
            consumed: false,
        });
        Ok((out, tape))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Checkpoint {
            version: CHECKPOINT_VERSION,
            params: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!("unsupported checkpoint version {}", c.version)));
        }
        if c.params.theta.len() != c.params.arch.param_count() {
            return Err(Error::Dimension("checkpoint parameter count mismatch".into()));
        }
        Ok(c.params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Tape {
    /// Smallest `|pre-activation|` recorded; distance of the forward pass from a kink.
    pub fn min_abs_preactivation(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|r| r.node_pre.iter().chain(r.edge_pre.iter().flatten()))
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    /// Accumulates `d(loss)/d(theta)` into `grad` given `d(loss)/d(output)`.
    pub fn backward(&mut self, params: &GnnParams, d_out: &[f64], grad: &mut [f64]) -> Result<()> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if grad.len() != self.param_len || params.theta.len() != self.param_len {
            return Err(Error::Dimension("gradient buffer does not match parameters".into()));
        }
        let h = params.arch.hidden;
        let rows = self.head_in.len() / h;
        if d_out.len() != rows {
            return Err(Error::Dimension(format!("{} output adjoints for {} outputs", d_out.len(), rows)));
        }
        self.consumed = true;
        let th = &params.theta;
        let lay = params.arch.layout();
        let n = self.n_nodes;
        let m = self.edges.len();
        let scale = params.scaler.output_scale;

        let mut d_head_in = vec![0.0; rows * h];
        let hs = &lay.head;
        for (k, &d) in d_out.iter().enumerate() {
            let g = d * scale;
            if g == 0.0 {
                continue;
            }
            grad[hs.b] += g;
            let x = row(&self.head_in, k, h);
            for r in 0..h {
                grad[hs.w + r] += g * x[r];
            }
            for (dx, w) in row_mut(&mut d_head_in, k, h).iter_mut().zip(&th[hs.w..hs.w + h]) {
                *dx = g * w;
            }
        }
        let (mut d_nodes, mut d_edges) = match self.mode {
            OutputMode::Edge => (vec![0.0; n * h], d_head_in),
            OutputMode::Node => (d_head_in, vec![0.0; m * h]),
        };

        for l in (0..self.layers.len()).rev() {
            let rec = &self.layers[l];
            let (wn, we) = (rec.wn, rec.we);
            let need_inputs = l > 0;
            let mut d_e_in = vec![0.0; if need_inputs { m * we } else { 0 }];

            if let (Some(s), Some(pre)) = (&lay.edge[l], &rec.edge_pre) {
                let mut src = vec![0.0; n * h];
                let mut dst = vec![0.0; n * h];
                let mut dpre = vec![0.0; h];
                for (k, &(i, j)) in self.edges.iter().enumerate() {
                    let de = row(&d_edges, k, h);
                    let p = row(pre, k, h);
                    for r in 0..h {
                        dpre[r] = de[r] * leaky_grad(p[r]);
                    }
                    for r in 0..h {
                        grad[s.b + r] += dpre[r];
                    }
                    block_outer(grad, s, h, &dpre, row(&rec.e_in, k, we));
                    if need_inputs {
                        block_mtv(th, s, h, &dpre, row_mut(&mut d_e_in, k, we));
                    }
                    for r in 0..h {
                        src[i * h + r] += dpre[r];
                        dst[j * h + r] += dpre[r];
                    }
                }
                for v in 0..n {
                    let x = row(&rec.n_out, v, h);
                    block_outer(grad, s, 0, row(&src, v, h), x);
                    block_outer(grad, s, h + we, row(&dst, v, h), x);
                    let dn = row_mut(&mut d_nodes, v, h);
                    block_mtv(th, s, 0, row(&src, v, h), dn);
                    block_mtv(th, s, h + we, row(&dst, v, h), dn);
                }
            }

            let s = &lay.node[l];
            let mut tgt = vec![0.0; n * h];
            let mut srcs = vec![0.0; n * h];
            let mut dpre = vec![0.0; h];
            for (k, &(j, i)) in self.edges.iter().enumerate() {
                let dn = row(&d_nodes, i, h);
                let p = row(&rec.node_pre, k, h);
                let w = self.inv_deg[i];
                for r in 0..h {
                    dpre[r] = dn[r] * w * leaky_grad(p[r]);
                }
                for r in 0..h {
                    grad[s.b + r] += dpre[r];
                }
                block_outer(grad, s, wn, &dpre, row(&rec.e_in, k, we));
                if need_inputs {
                    block_mtv(th, s, wn, &dpre, row_mut(&mut d_e_in, k, we));
                }
                for r in 0..h {
                    tgt[i * h + r] += dpre[r];
                    srcs[j * h + r] += dpre[r];
                }
            }
            let mut d_n_in = vec![0.0; if need_inputs { n * wn } else { 0 }];
            for v in 0..n {
                let x = row(&rec.n_in, v, wn);
                block_outer(grad, s, 0, row(&tgt, v, h), x);
                block_outer(grad, s, wn + we, row(&srcs, v, h), x);
                if need_inputs {
                    let dn = row_mut(&mut d_n_in, v, wn);
                    block_mtv(th, s, 0, row(&tgt, v, h), dn);
                    block_mtv(th, s, wn + we, row(&srcs, v, h), dn);
                }
            }
            d_nodes = d_n_in;
            d_edges = d_e_in;
        }
        Ok(())
    }
}
