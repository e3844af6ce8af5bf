//! Dense two-phase primal simplex for `max c.x  s.t.  A x = b, x >= 0`.
//!
//! Entering and leaving variables follow Bland's rule (lowest index), which
//! rules out cycling on degenerate vertices. Instances here are at most a few
//! hundred columns, so a full tableau is fine.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivot elements smaller than this are treated as zero.
const PIVOT_TOL: f64 = 1e-9;
/// Reduced costs above this admit an entering column.
const COST_TOL: f64 = 1e-11;
/// Required primal feasibility at a reported optimum (relative to `max(1, |b|)`).
pub const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;
/// Smallest entry accepted when pivoting an artificial out after phase one.
const DRIVE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl LpProblem {
    pub fn new(c: Vec<f64>, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let col_names = (0..c.len()).map(|j| format!("X{}", j + 1)).collect();
        let row_names = (0..b.len()).map(|i| format!("R{}", i + 1)).collect();
        let p = Self {
            c,
            a,
            b,
            col_names,
            row_names,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.ncols() != self.c.len() || self.a.nrows() != self.b.len() {
            return Err(Error::Dimension(format!(
                "A is {}x{}, c has {}, b has {}",
                self.a.nrows(),
                self.a.ncols(),
                self.c.len(),
                self.b.len()
            )));
        }
        if self.col_names.len() != self.c.len() || self.row_names.len() != self.b.len() {
            return Err(Error::Dimension("name lists do not match the problem".into()));
        }
        let finite = self.c.iter().chain(&self.b).chain(self.a.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Precondition("non-finite LP coefficient".into()));
        }
        Ok(())
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// `max_i |(A x - b)_i|`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let ax = &self.a * DVector::from_column_slice(x);
        ax.iter().zip(&self.b).fold(0.0_f64, |m, (l, r)| m.max((l - r).abs()))
    }

    /// Fixed-column MPS. MPS minimizes, so the objective row holds `-c`.
    pub fn to_mps(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "* maximization problem: objective row negated");
        let _ = writeln!(s, "NAME          {name}");
        let _ = writeln!(s, "ROWS");
        let _ = writeln!(s, " N  COST");
        for r in &self.row_names {
            let _ = writeln!(s, " E  {r}");
        }
        let _ = writeln!(s, "COLUMNS");
        for (j, col) in self.col_names.iter().enumerate() {
            let mut entries = Vec::new();
            if self.c[j] != 0.0 {
                entries.push(("COST", -self.c[j]));
            }
            for (i, r) in self.row_names.iter().enumerate() {
                if self.a[(i, j)] != 0.0 {
                    entries.push((r.as_str(), self.a[(i, j)]));
                }
            }
            for (row, v) in entries {
                let _ = writeln!(s, "    {col:<8}  {row:<8}  {:>12}", mps_number(v));
            }
        }
        let _ = writeln!(s, "RHS");
        for (i, r) in self.row_names.iter().enumerate() {
            if self.b[i] != 0.0 {
                let _ = writeln!(s, "    RHS       {r:<8}  {:>12}", mps_number(self.b[i]));
            }
        }
        let _ = writeln!(s, "ENDATA");
        s
    }
}

/// Shortest representation that fits the 12-character MPS value field.
fn mps_number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for digits in (1..=8).rev() {
        let e = format!("{v:.digits$e}");
        if e.len() <= 12 {
            return e;
        }
    }
    format!("{v:.1e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot limit hit or the final point misses the feasibility tolerance.
    Breakdown(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point (all zeros unless optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Equality multipliers `y` with `A^T y >= c` at an optimum (0 on dropped rows).
    pub duals: Vec<f64>,
    /// Rows found linearly dependent in phase one.
    pub redundant_rows: Vec<usize>,
    pub pivots: usize,
    pub residual: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Optimality residuals: primal feasibility, dual infeasibility and
/// complementary slackness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kkt {
    pub primal: f64,
    pub negative_x: f64,
    pub dual: f64,
    pub slackness: f64,
}

impl Kkt {
    pub fn max(&self) -> f64 {
        self.primal.max(self.negative_x).max(self.dual).max(self.slackness)
    }
}

pub fn kkt(problem: &LpProblem, sol: &LpSolution) -> Kkt {
    let y = DVector::from_column_slice(&sol.duals);
    let aty = problem.a.transpose() * y;
    let mut dual = 0.0_f64;
    let mut slackness = 0.0_f64;
    for j in 0..problem.n_vars() {
        // Reduced cost of column j; nonpositive at a maximum.
        let r = problem.c[j] - aty[j];
        dual = dual.max(r);
        slackness = slackness.max((sol.x[j] * r).abs());
    }
    Kkt {
        primal: problem.residual(&sol.x),
        negative_x: sol.x.iter().fold(0.0_f64, |m, v| m.max(-v)),
        dual,
        slackness,
    }
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Objective row of reduced costs; its last entry is `-z`.
    obj: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.t[r][e];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        self.t[r][e] = 1.0;
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[e] = 0.0;
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    /// Runs Bland pivots over columns `< allowed`. `Ok(true)` at an optimum,
    /// `Ok(false)` if unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool, String> {
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(format!("pivot limit {MAX_PIVOTS} reached"));
            }
            let Some(e) = (0..allowed).find(|&j| self.obj[j] > COST_TOL) else {
                return Ok(true);
            };
            let rhs = self.t.first().map_or(0, |r| r.len() - 1);
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[e] > PIVOT_TOL {
                    let ratio = row[rhs].max(0.0) / row[e];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best || (ratio == best && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, e),
            }
        }
    }
}

pub fn simplex_solve(problem: &LpProblem) -> Result<LpSolution> {
    problem.validate()?;
    let m = problem.n_rows();
    let n = problem.n_vars();
    let scale = problem.b.iter().fold(1.0_f64, |s, v| s.max(v.abs()));

    // Phase one: artificial columns n..n+m, rows flipped so b >= 0.
    let width = n + m + 1;
    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if problem.b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width];
        for j in 0..n {
            row[j] = sign * problem.a[(i, j)];
        }
        row[n + i] = 1.0;
        row[width - 1] = sign * problem.b[i];
        t.push(row);
    }
    let mut obj = vec![0.0; width];
    for row in &t {
        for j in 0..n {
            obj[j] += row[j];
        }
        obj[width - 1] += row[width - 1];
    }
    let mut tab = Tableau {
        t,
        obj,
        basis: (n..n + m).collect(),
        pivots: 0,
    };
    let failed = |status: LpStatus, tab: &Tableau, redundant: Vec<usize>| LpSolution {
        status,
        x: vec![0.0; n],
        objective: 0.0,
        duals: vec![0.0; m],
        redundant_rows: redundant,
        pivots: tab.pivots,
        residual: f64::NAN,
    };

    if let Err(msg) = tab.optimize(n + m) {
        return Ok(failed(LpStatus::Breakdown(msg), &tab, Vec::new()));
    }
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(&tab.t)
        .filter(|(b, _)| **b >= n)
        .map(|(_, row)| row[width - 1])
        .sum();
    if infeasibility > FEAS_TOL * scale {
        return Ok(failed(LpStatus::Infeasible, &tab, Vec::new()));
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linear combinations of the others.
    let mut redundant = Vec::new();
    let mut r = 0;
    while r < tab.t.len() {
        if tab.basis[r] >= n {
            // The largest entry keeps the pivot well conditioned.
            let entering = (0..n)
                .map(|j| (j, tab.t[r][j].abs()))
                .filter(|&(_, v)| v > DRIVE_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(j, _)| j);
            match entering {
                Some(e) => tab.pivot(r, e),
                None => {
                    redundant.push(tab.basis[r] - n);
                    tab.t.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    redundant.sort_unstable();

    // Phase two objective in reduced-cost form.
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(&problem.c);
    for (row, &b) in tab.t.iter().zip(&tab.basis) {
        let cb = problem.c[b];
        if cb != 0.0 {
            for (v, x) in obj.iter_mut().zip(row) {
                *v -= cb * x;
            }
        }
    }
    for &b in &tab.basis {
        obj[b] = 0.0;
    }
    tab.obj = obj;
    match tab.optimize(n) {
        Err(msg) => return Ok(failed(LpStatus::Breakdown(msg), &tab, redundant)),
        Ok(false) => return Ok(failed(LpStatus::Unbounded, &tab, redundant)),
        Ok(true) => {}
    }

    let mut x = vec![0.0; n];
    for (row, &b) in tab.t.iter().zip(&tab.basis) {
        x[b] = row[width - 1].max(0.0);
    }
    // Tableau updates drift over many pivots; re-solve the basic block from
    // the original data.
    if let Some(xb) = basic_solution(problem, &tab.basis, &redundant) {
        if xb.iter().all(|v| *v >= -FEAS_TOL * scale) {
            x.iter_mut().for_each(|v| *v = 0.0);
            for (&b, v) in tab.basis.iter().zip(xb) {
                x[b] = v.max(0.0);
            }
        }
    }
    let duals = basis_duals(problem, &tab.basis, &redundant);
    let residual = problem.residual(&x);
    let status = if residual <= FEAS_TOL * scale {
        LpStatus::Optimal
    } else {
        LpStatus::Breakdown(format!("feasibility residual {residual:e}"))
    };
    Ok(LpSolution {
        status,
        objective: problem.objective(&x),
        x,
        duals,
        redundant_rows: redundant,
        pivots: tab.pivots,
        residual,
    })
}

/// Solves `B x_B = b` on the kept rows.
fn basic_solution(problem: &LpProblem, basis: &[usize], redundant: &[usize]) -> Option<Vec<f64>> {
    let kept: Vec<usize> = (0..problem.n_rows()).filter(|i| !redundant.contains(i)).collect();
    let k = kept.len();
    if k == 0 {
        return Some(Vec::new());
    }
    let bm = DMatrix::from_fn(k, k, |r, c| problem.a[(kept[r], basis[c])]);
    let rhs = DVector::from_iterator(k, kept.iter().map(|&i| problem.b[i]));
    bm.lu().solve(&rhs).map(|v| v.iter().copied().collect())
}

/// Solves `B^T y = c_B` on the kept rows.
fn basis_duals(problem: &LpProblem, basis: &[usize], redundant: &[usize]) -> Vec<f64> {
    let m = problem.n_rows();
    let kept: Vec<usize> = (0..m).filter(|i| !redundant.contains(i)).collect();
    let k = kept.len();
    let mut duals = vec![0.0; m];
    if k == 0 {
        return duals;
    }
    let bt = DMatrix::from_fn(k, k, |r, c| problem.a[(kept[c], basis[r])]);
    let cb = DVector::from_iterator(k, basis.iter().map(|&j| problem.c[j]));
    if let Some(y) = bt.lu().solve(&cb) {
        for (p, &i) in kept.iter().enumerate() {
            duals[i] = y[p];
        }
    }
    duals
}
