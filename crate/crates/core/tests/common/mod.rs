#![allow(dead_code)]

use fxarb::fx_graph::{LinkSet, RateMatrix};
use fxarb::statarb::{build_constraints, symmetrize_predictions, tradable_links, ConstraintSystem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random positive predictions on all ordered pairs, then symmetrized.
pub fn random_xp(rng: &mut ChaCha8Rng, n: usize) -> RateMatrix {
    let logv: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut x = RateMatrix::new(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                x.set(i, j, (logv[i] - logv[j] + rng.random_range(-0.05..0.05)).exp());
            }
        }
    }
    symmetrize_predictions(&x)
}

/// Constraint system over all pairs of `n` currencies (optionally dropping some pairs).
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, drop_prob: f64) -> ConstraintSystem {
    let xp = random_xp(rng, n);
    let mut u = LinkSet::complete(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if i != 0 && rng.random_bool(drop_prob) {
                u.remove(i, j);
                u.remove(j, i);
            }
        }
    }
    let links = tradable_links(&u, &LinkSet::complete(n), 0);
    build_constraints(&links, &xp)
}

/// Null-space basis from reduced row echelon form (not orthonormal).
pub fn rref_null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    let mut m = a.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let (p, best) = (r..rows).map(|i| (i, m[(i, c)].abs())).fold((r, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if best <= tol {
            continue;
        }
        m.swap_rows(r, p);
        let piv = m[(r, c)];
        for k in 0..cols {
            m[(r, k)] /= piv;
        }
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f != 0.0 {
                    for k in 0..cols {
                        m[(i, k)] -= f * m[(r, k)];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut n = DMatrix::zeros(cols, free.len());
    for (f, &fc) in free.iter().enumerate() {
        n[(fc, f)] = 1.0;
        for (pr, &pc) in pivots.iter().enumerate() {
            n[(pc, f)] = -m[(pr, fc)];
        }
    }
    n
}

/// `N (NᵀN)⁻¹ Nᵀ`.
pub fn projector_from(n: &DMatrix<f64>) -> DMatrix<f64> {
    if n.ncols() == 0 {
        return DMatrix::zeros(n.nrows(), n.nrows());
    }
    let g = n.transpose() * n;
    n * g.try_inverse().expect("basis has full column rank") * n.transpose()
}

pub fn max_abs<'a>(m: impl IntoIterator<Item = &'a f64>) -> f64 {
    m.into_iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Relative agreement at 1e-5, with magnitudes floored at `1e-4 * max(|loss|, 1)`:
/// below that a central difference with step 1e-5 is dominated by rounding.
pub fn fd_agrees(analytic: f64, fd: f64, loss: f64) -> bool {
    let floor = 1e-4 * loss.abs().max(1.0);
    (analytic - fd).abs() <= 1e-5 * analytic.abs().max(fd.abs()).max(floor)
}

/// Best objective over basic feasible solutions of `max c.x, A x = b, x >= 0`,
/// by trying every column subset of size `rank(A)`. `None` if none is feasible.
pub fn vertex_enumeration(c: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Option<f64> {
    let n = a.ncols();
    let rank = a.clone().svd(false, false).rank(1e-9);
    let bv = nalgebra::DVector::from_column_slice(b);
    let mut best: Option<f64> = None;
    if rank == 0 {
        return if b.iter().all(|v| v.abs() <= 1e-9) { Some(0.0) } else { None };
    }
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != rank {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let sub = DMatrix::from_fn(a.nrows(), rank, |i, k| a[(i, cols[k])]);
        let svd = sub.clone().svd(true, true);
        if svd.rank(1e-9) < rank {
            continue;
        }
        let xs = svd.solve(&bv, 1e-12).expect("svd solve");
        if (&sub * &xs - &bv).amax() > 1e-9 || xs.iter().any(|v| *v < -1e-9) {
            continue;
        }
        let value: f64 = cols.iter().zip(xs.iter()).map(|(j, x)| c[*j] * x).sum();
        best = Some(best.map_or(value, |b: f64| b.max(value)));
    }
    best
}

/// Synthetic market prepared with default cleaning, plus its derived history.
pub fn synthetic_history(
    cfg: &fxarb::market_data::SyntheticConfig,
) -> (fxarb::market_data::Market, fxarb::fx_graph::MarketHistory) {
    let s = fxarb::market_data::generate_synthetic(cfg).unwrap();
    let market =
        fxarb::market_data::Market::prepare(s.calendar, s.fx, s.ir, &fxarb::market_data::CleaningConfig::default())
            .unwrap();
    let history = fxarb::fx_graph::MarketHistory::new(&market);
    (market, history)
}
