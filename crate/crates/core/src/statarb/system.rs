use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::links::TradableLinks;
use crate::fx_graph::RateMatrix;
use crate::linalg::kernel_basis;

/// Singular-value tolerance of the kernel basis, relative to the largest row norm.
pub const KERNEL_TOL: f64 = 1e-10;

/// `X'_ij = sqrt(X_ij / X_ji)` wherever both directions are predicted;
/// single-direction entries are dropped.
pub fn symmetrize_predictions(x: &RateMatrix) -> RateMatrix {
    let n = x.n();
    let mut out = RateMatrix::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if let (Some(a), Some(b)) = (x.get(i, j), x.get(j, i)) {
                let s = (a / b).sqrt();
                out.set(i, j, s);
                out.set(j, i, 1.0 / s);
            }
        }
    }
    out
}

/// Flow-conservation and direct-arbitrage rows over `U'_t`, with an
/// orthonormal basis of their null space and the orthogonal projector onto it.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub links: TradableLinks,
    /// Symmetrized predictions the rows were built from.
    pub xp: RateMatrix,
    pub a: DMatrix<f64>,
    pub basis: DMatrix<f64>,
    pub proj: DMatrix<f64>,
}

impl ConstraintSystem {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn home(&self) -> usize {
        self.links.home()
    }

    /// `P u'`.
    pub fn project(&self, u_raw: &[f64]) -> Vec<f64> {
        if self.n_links() == 0 {
            return Vec::new();
        }
        let v = DVector::from_column_slice(u_raw);
        (&self.proj * v).as_slice().to_vec()
    }

    /// Text dump of the matrix, basis and projector.
    pub fn debug_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "links {:?}", self.links.links());
        let _ = writeln!(s, "A {}x{}", self.a.nrows(), self.a.ncols());
        for r in self.a.row_iter() {
            let _ = writeln!(s, "{}", r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" "));
        }
        let _ = writeln!(s, "basis {}x{}", self.basis.nrows(), self.basis.ncols());
        for r in self.basis.row_iter() {
            let _ = writeln!(s, "{}", r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" "));
        }
        let _ = writeln!(s, "proj {}x{}", self.proj.nrows(), self.proj.ncols());
        for r in self.proj.row_iter() {
            let _ = writeln!(s, "{}", r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" "));
        }
        s
    }
}

/// Builds the rows
/// `sum_j u_ij = 0` for each non-home currency `i`, and
/// `X'_oi u_ij + X'_oj X'_ji u_ji = 0` for each pair `i < j`,
/// then the kernel basis and projector.
pub fn build_constraints(links: &TradableLinks, xp: &RateMatrix) -> ConstraintSystem {
    let d = links.len();
    let n = links.n_currencies();
    let o = links.home();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        if i == o {
            continue;
        }
        let mut r = vec![0.0; d];
        let mut any = false;
        for (k, &(a, _)) in links.links().iter().enumerate() {
            if a == i {
                r[k] = 1.0;
                any = true;
            }
        }
        if any {
            rows.push(r);
        }
    }
    for (k, &(i, j)) in links.links().iter().enumerate() {
        if i > j {
            continue;
        }
        let back = links.index_of(j, i).expect("links are closed under reversal");
        let mut r = vec![0.0; d];
        r[k] = xp.at(o, i);
        r[back] = xp.at(o, j) * xp.at(j, i);
        rows.push(r);
    }
    let a = DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]);
    let basis = if d == 0 {
        DMatrix::zeros(0, 0)
    } else {
        kernel_basis(&a, KERNEL_TOL)
    };
    let proj = &basis * basis.transpose();
    ConstraintSystem {
        links: links.clone(),
        xp: xp.clone(),
        a,
        basis,
        proj,
    }
}
