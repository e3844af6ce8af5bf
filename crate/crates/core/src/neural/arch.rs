use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the head reads: final edge embeddings or final node embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    Edge,
    Node,
}

/// Offsets of one single-layer perceptron inside the flat parameter vector.
///
/// The weight is row-major `rows x cols`; the bias follows at `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlpLayout {
    pub w: usize,
    pub b: usize,
    pub rows: usize,
    pub cols: usize,
}

impl SlpLayout {
    fn at(offset: usize, rows: usize, cols: usize) -> Self {
        Self {
            w: offset,
            b: offset + rows * cols,
            rows,
            cols,
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn end(&self) -> usize {
        self.b + self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub node: Vec<SlpLayout>,
    /// `None` for the last layer in node mode (its edge embeddings are never read).
    pub edge: Vec<Option<SlpLayout>>,
    pub head: SlpLayout,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub node_in: usize,
    pub edge_in: usize,
    pub hidden: usize,
    pub layers: usize,
    pub mode: OutputMode,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.node_in == 0 || self.edge_in == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(Error::Dimension(format!("degenerate architecture {self:?}")));
        }
        Ok(())
    }

    /// Layer `l` node conv maps `[n_i ; e_ji ; n_j]` (widths `wn, we, wn`) to `hidden`;
    /// the edge conv maps `[n_i ; e_ij ; n_j]` (widths `hidden, we, hidden`) to `hidden`.
    /// `wn`/`we` are the input widths at layer 1 and `hidden` afterwards.
    pub fn layout(&self) -> Layout {
        let h = self.hidden;
        let mut off = 0;
        let mut node = Vec::with_capacity(self.layers);
        let mut edge = Vec::with_capacity(self.layers);
        for l in 0..self.layers {
            let (wn, we) = if l == 0 { (self.node_in, self.edge_in) } else { (h, h) };
            let n = SlpLayout::at(off, h, 2 * wn + we);
            off = n.end();
            node.push(n);
            if l + 1 == self.layers && self.mode == OutputMode::Node {
                edge.push(None);
            } else {
                let e = SlpLayout::at(off, h, 2 * h + we);
                off = e.end();
                edge.push(Some(e));
            }
        }
        let head = SlpLayout::at(off, 1, h);
        off = head.end();
        Layout {
            node,
            edge,
            head,
            total: off,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    /// Input width `(wn, we)` seen by layer `l`.
    pub fn widths_at(&self, l: usize) -> (usize, usize) {
        if l == 0 {
            (self.node_in, self.edge_in)
        } else {
            (self.hidden, self.hidden)
        }
    }
}

/// Largest hidden width whose network fits in `budget` parameters.
pub fn width_for_budget(
    budget: usize,
    layers: usize,
    node_in: usize,
    edge_in: usize,
    mode: OutputMode,
) -> Result<usize> {
    let arch = |hidden| Architecture {
        node_in,
        edge_in,
        hidden,
        layers,
        mode,
    };
    arch(1).validate()?;
    let min = arch(1).param_count();
    if budget < min {
        return Err(Error::Config(format!(
            "parameter budget {budget} below the minimum {min} for {layers} layers"
        )));
    }
    let mut h = 1;
    while arch(h + 1).param_count() <= budget {
        h += 1;
    }
    Ok(h)
}
