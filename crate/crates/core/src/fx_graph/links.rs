use crate::market_data::FxPanel;

/// Set of ordered currency pairs on `n` currencies.
///
/// Iteration order is lexicographic in `(i, j)`; this is the canonical link
/// order used by every vector indexed by links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSet {
    n: usize,
    member: Vec<bool>,
    len: usize,
}

impl LinkSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            member: vec![false; n * n],
            len: 0,
        }
    }

    /// All ordered pairs without self-loops.
    pub fn complete(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s.insert(i, j);
                }
            }
        }
        s
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut s = Self::empty(n);
        for (i, j) in pairs {
            s.insert(i, j);
        }
        s
    }

    pub fn n_currencies(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.member[i * self.n + j]
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        assert!(i != j, "self-loop ({i},{i})");
        let s = &mut self.member[i * self.n + j];
        if !*s {
            *s = true;
            self.len += 1;
        }
    }

    pub fn remove(&mut self, i: usize, j: usize) {
        let s = &mut self.member[i * self.n + j];
        if *s {
            *s = false;
            self.len -= 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.member
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(move |(k, _)| (k / n, k % n))
    }

    pub fn intersect(&self, other: &LinkSet) -> LinkSet {
        assert_eq!(self.n, other.n);
        let member: Vec<bool> = self
            .member
            .iter()
            .zip(&other.member)
            .map(|(a, b)| *a && *b)
            .collect();
        let len = member.iter().filter(|m| **m).count();
        LinkSet { n: self.n, member, len }
    }

    /// Pairs `(i, j)` whose reverse `(j, i)` is also present.
    pub fn reciprocal(&self) -> LinkSet {
        LinkSet::from_pairs(self.n, self.iter().filter(|&(i, j)| self.contains(j, i)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(i, j)| self.contains(j, i))
    }

    /// Position of each member in canonical order, `None` for non-members.
    pub fn positions(&self) -> Vec<Option<usize>> {
        let mut k = 0;
        self.member
            .iter()
            .map(|m| {
                m.then(|| {
                    k += 1;
                    k - 1
                })
            })
            .collect()
    }
}

/// One date of the FX market as a graph: quoted pairs plus node/edge rates.
#[derive(Debug, Clone)]
pub struct GraphSnapshot {
    pub edges: LinkSet,
    pub node_rates: Vec<Option<f64>>,
    /// `edge_rates[i * n + j]`, NaN off the edge set.
    pub edge_rates: Vec<f64>,
}

impl GraphSnapshot {
    pub fn from_panel(fx: &FxPanel, t: usize, node_rates: Vec<Option<f64>>) -> Self {
        let n = fx.n_currencies();
        let mut edges = LinkSet::empty(n);
        let mut edge_rates = vec![f64::NAN; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let Some(x) = fx.get(t, i, j) {
                    edges.insert(i, j);
                    edge_rates[i * n + j] = x;
                }
            }
        }
        Self {
            edges,
            node_rates,
            edge_rates,
        }
    }
}

/// `L_t`: the mutually quoted pairs of a snapshot.
pub fn reciprocal_edges(snapshot: &GraphSnapshot) -> LinkSet {
    snapshot.edges.reciprocal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_keeps_only_mutual_pairs() {
        let e = LinkSet::from_pairs(3, [(0, 1), (1, 0), (0, 2)]);
        let l = e.reciprocal();
        assert_eq!(l.iter().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
        assert_eq!(LinkSet::complete(4).reciprocal(), LinkSet::complete(4));
        assert!(LinkSet::empty(3).reciprocal().is_empty());
    }

    #[test]
    fn canonical_order_is_lexicographic() {
        let s = LinkSet::complete(3);
        assert_eq!(
            s.iter().collect::<Vec<_>>(),
            vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
        );
        let pos = s.positions();
        assert_eq!(pos[3 + 2], Some(3));
        assert_eq!(pos[0], None);
    }

    #[test]
    fn snapshot_from_panel() {
        let mut fx = FxPanel::new(vec!["A".into(), "B".into(), "C".into()], 1);
        fx.set(1, 0, 1, 2.0);
        fx.set(1, 1, 0, 0.5);
        fx.set(1, 0, 2, 3.0);
        let snap = GraphSnapshot::from_panel(&fx, 1, vec![None; 3]);
        assert_eq!(snap.edges.len(), 3);
        assert_eq!(reciprocal_edges(&snap).len(), 2);
    }
}
