//! Maximum-likelihood currency values on the reciprocal-link graph.
//!
//! Under Gaussian arbitrage noise the log-likelihood of the pair residuals is
//! maximized by the least-squares solution of `logV_i - logV_j = logX_ij`
//! over links with `i < j`, pinned down by `mean(logV) = 0`.

use nalgebra::{DMatrix, DVector};

use super::links::LinkSet;

#[derive(Debug, Clone, PartialEq)]
pub struct CurrencyValues {
    pub log_values: Vec<f64>,
    /// `alpha_ij = logX_ij - logV_i + logV_j` for each link with `i < j`.
    pub residuals: Vec<((usize, usize), f64)>,
    /// Currencies touched by no link; their value is fixed at 0.
    pub isolated: Vec<usize>,
    /// Number of connected components with at least one link.
    pub components: usize,
}

impl CurrencyValues {
    pub fn is_connected(&self) -> bool {
        self.components <= 1 && self.isolated.is_empty()
    }

    /// Residual for an ordered link (antisymmetric in the pair).
    pub fn residual(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        self.residuals
            .iter()
            .find(|((x, y), _)| *x == a && *y == b)
            .map(|(_, r)| s * r)
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Solves for log currency values. `log_rate(i, j)` is queried for links `i < j`.
///
/// A disconnected link graph is solved per component, each with zero mean.
pub fn currency_values(links: &LinkSet, log_rate: impl Fn(usize, usize) -> f64) -> CurrencyValues {
    let n = links.n_currencies();
    let pairs: Vec<(usize, usize, f64)> = links
        .iter()
        .filter(|(i, j)| i < j && links.contains(*j, *i))
        .map(|(i, j)| (i, j, log_rate(i, j)))
        .collect();

    let mut parent: Vec<usize> = (0..n).collect();
    let mut touched = vec![false; n];
    for &(i, j, _) in &pairs {
        touched[i] = true;
        touched[j] = true;
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();

    let mut log_values = vec![0.0; n];
    let isolated: Vec<usize> = (0..n).filter(|i| !touched[*i]).collect();
    let mut components = 0;
    let mut seen = vec![false; n];
    for start in 0..n {
        if !touched[start] || seen[roots[start]] {
            continue;
        }
        seen[roots[start]] = true;
        components += 1;
        let members: Vec<usize> = (0..n).filter(|i| touched[*i] && roots[*i] == roots[start]).collect();
        let k = members.len();
        let mut local = vec![usize::MAX; n];
        for (p, m) in members.iter().enumerate() {
            local[*m] = p;
        }
        // Normal equations of the stacked system: Laplacian plus the unit-weight mean row.
        let w = 1.0 / (k * k) as f64;
        let mut lhs = DMatrix::<f64>::from_element(k, k, w);
        let mut rhs = DVector::<f64>::zeros(k);
        for &(i, j, x) in &pairs {
            if roots[i] != roots[start] {
                continue;
            }
            let (a, b) = (local[i], local[j]);
            lhs[(a, a)] += 1.0;
            lhs[(b, b)] += 1.0;
            lhs[(a, b)] -= 1.0;
            lhs[(b, a)] -= 1.0;
            rhs[a] += x;
            rhs[b] -= x;
        }
        let sol = lhs
            .cholesky()
            .expect("Laplacian plus mean row is positive definite on a connected component")
            .solve(&rhs);
        for (p, m) in members.iter().enumerate() {
            log_values[*m] = sol[p];
        }
    }

    let residuals = pairs
        .iter()
        .map(|&(i, j, x)| ((i, j), x - log_values[i] + log_values[j]))
        .collect();
    CurrencyValues {
        log_values,
        residuals,
        isolated,
        components,
    }
}
