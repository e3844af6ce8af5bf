use crate::fx_graph::LinkSet;

/// Exchanges the second stage may trade on one date, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradableLinks {
    n: usize,
    home: usize,
    links: Vec<(usize, usize)>,
    index: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl TradableLinks {
    /// `links` must be closed under reversal; order is taken as given.
    pub fn from_links(n: usize, home: usize, links: Vec<(usize, usize)>) -> Self {
        let mut index = vec![ABSENT; n * n];
        for (k, &(i, j)) in links.iter().enumerate() {
            assert!(i != j && i < n && j < n, "bad link ({i}, {j})");
            assert!(index[i * n + j] == ABSENT, "duplicate link ({i}, {j})");
            index[i * n + j] = k;
        }
        for &(i, j) in &links {
            assert!(index[j * n + i] != ABSENT, "link ({i}, {j}) lacks its reverse");
        }
        Self { n, home, links, index }
    }

    pub fn empty(n: usize, home: usize) -> Self {
        Self::from_links(n, home, Vec::new())
    }

    pub fn n_currencies(&self) -> usize {
        self.n
    }

    pub fn home(&self) -> usize {
        self.home
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Position of `(i, j)` in [`links`](Self::links).
    #[inline]
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n {
            return None;
        }
        let k = self.index[i * self.n + j];
        (k != ABSENT).then_some(k)
    }

    /// Currencies touched by at least one link, plus the home currency.
    pub fn currencies(&self) -> Vec<usize> {
        let mut used = vec![false; self.n];
        used[self.home] = true;
        for &(i, j) in &self.links {
            used[i] = true;
            used[j] = true;
        }
        (0..self.n).filter(|&i| used[i]).collect()
    }
}

/// `U'_t`: the links of `u` whose legs to and from the home currency are
/// available (`(o,i),(o,j)` predicted, `(i,o),(j,o)` quoted), kept only when
/// both directions qualify.
pub fn tradable_links(u: &LinkSet, e: &LinkSet, home: usize) -> TradableLinks {
    let n = u.n_currencies();
    let from_home = |i: usize| i == home || u.contains(home, i);
    let to_home = |i: usize| i == home || e.contains(i, home);
    let ok = |i: usize, j: usize| u.contains(i, j) && from_home(i) && from_home(j) && to_home(i) && to_home(j);
    let links = u.iter().filter(|&(i, j)| ok(i, j) && ok(j, i)).collect();
    TradableLinks::from_links(n, home, links)
}
