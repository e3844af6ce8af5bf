//! Self-check battery: constraint, gradient and solver invariants on random
//! instances, each reported as pass/fail.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fx_graph::{currency_values, LinkSet, RateMatrix};
use crate::lp_bench::{kkt, simplex_solve, LpProblem, LpStatus};
use crate::market_data::{generate_synthetic, CleaningConfig, Market, SyntheticConfig};
use crate::neural::{Architecture, GnnParams, GraphRef, HeadInit, OutputMode, Scaler};
use crate::statarb::{
    build_constraints, c1_to_u, fxsa_loss, h_so, symmetrize_predictions, tradable_links, verify_c1, BatchStats,
    ConstraintSystem,
};
use crate::{fx_graph::MarketHistory, Error};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<String, String>) -> Check {
    match result {
        Ok(detail) => Check {
            name,
            passed: true,
            detail,
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

/// Random constraint system on `n` currencies with home 0.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, drop_prob: f64) -> ConstraintSystem {
    let logv: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut x = RateMatrix::new(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                x.set(i, j, (logv[i] - logv[j] + rng.random_range(-0.05..0.05)).exp());
            }
        }
    }
    let xp = symmetrize_predictions(&x);
    let mut u = LinkSet::complete(n);
    for i in 1..n {
        for j in (i + 1)..n {
            if rng.random_bool(drop_prob) {
                u.remove(i, j);
                u.remove(j, i);
            }
        }
    }
    build_constraints(&tradable_links(&u, &LinkSet::complete(n), 0), &xp)
}

fn currency_value_triangle() -> Result<String, String> {
    let cv = currency_values(&LinkSet::complete(3), |_, _| 1.0);
    let want = [2.0 / 3.0, 0.0, -2.0 / 3.0];
    let err = cv.log_values.iter().zip(want).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if err <= 1e-12 {
        Ok(format!("max error {err:e}"))
    } else {
        Err(format!("log values {:?}", cv.log_values))
    }
}

fn projection_laws(rng: &mut ChaCha8Rng, cases: usize) -> Result<String, String> {
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let n = rng.random_range(3..=6);
        let s = random_system(rng, n, 0.3);
        let p = &s.proj;
        let sym = (p - p.transpose()).amax();
        let idem = (p * p - p).amax();
        let ker = if s.a.nrows() > 0 { (&s.a * p).amax() } else { 0.0 };
        worst = worst.max(sym).max(idem).max(ker);
    }
    if worst <= 1e-10 {
        Ok(format!("{cases} systems, worst residual {worst:e}"))
    } else {
        Err(format!("residual {worst:e}"))
    }
}

fn h_so_feasibility(rng: &mut ChaCha8Rng, cases: usize) -> Result<String, String> {
    let mut traded = 0;
    let mut round_trips = 0;
    for _ in 0..cases {
        let n = rng.random_range(3..=6);
        let s = random_system(rng, n, 0.3);
        if s.dim() == 0 {
            continue;
        }
        let raw: Vec<f64> = (0..s.n_links()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let plan = h_so(&s, &raw).map_err(|e| e.to_string())?;
        if plan.degenerate {
            continue;
        }
        let report = verify_c1(&plan.w, &s.links, &s.xp);
        if !report.ok() {
            return Err(report.violations().join("; "));
        }
        traded += 1;
        let u = c1_to_u(&plan.w, &s.links, &s.xp).map_err(|e| e.to_string())?;
        let back = h_so(&s, &u).map_err(|e| e.to_string())?;
        let err = back.w.iter().zip(&plan.w).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if err > 1e-12 {
            return Err(format!("round trip off by {err:e}"));
        }
        round_trips += 1;
    }
    Ok(format!("{traded} plans feasible, {round_trips} round trips exact"))
}

fn loss_hand_cases() -> Result<String, String> {
    let a = fxsa_loss(&BatchStats::new(vec![0.01, 0.03]).unwrap(), 1e-12);
    let b = fxsa_loss(&BatchStats::new(vec![-0.01, -0.03]).unwrap(), 1e-12);
    if (a + 2.0).abs() <= 1e-12 && (b - 0.02).abs() <= 1e-12 {
        Ok(format!("{a} and {b}"))
    } else {
        Err(format!("got {a} and {b}"))
    }
}

fn gnn_gradient(rng: &mut ChaCha8Rng) -> Result<String, String> {
    let (wn, we) = (3, 2);
    for attempt in 0..50u64 {
        let n = 5;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(0.5) {
                    edges.push((i, j));
                }
            }
        }
        let nf: Vec<f64> = (0..n * wn).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ef: Vec<f64> = (0..edges.len() * we).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = GraphRef {
            n_nodes: n,
            node_features: &nf,
            node_present: None,
            edges: &edges,
            edge_features: &ef,
        };
        let arch = Architecture {
            node_in: wn,
            edge_in: we,
            hidden: 4,
            layers: 2,
            mode: OutputMode::Edge,
        };
        let mut p = GnnParams::init(arch, Scaler::identity(wn, we), attempt, HeadInit::Glorot).map_err(|e| e.to_string())?;
        let target: Vec<f64> = (0..edges.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |p: &GnnParams| -> f64 {
            let out = p.forward(&g).unwrap();
            out.iter().zip(&target).map(|(o, y)| 0.5 * (o - y) * (o - y)).sum()
        };
        let (out, mut tape) = p.forward_tape(&g).map_err(|e| e.to_string())?;
        if tape.min_abs_preactivation() < 1e-4 {
            continue;
        }
        let d: Vec<f64> = out.iter().zip(&target).map(|(o, y)| o - y).collect();
        let mut grad = vec![0.0; p.len()];
        tape.backward(&p, &d, &mut grad).map_err(|e| e.to_string())?;
        let l0 = loss(&p);
        let h = 1e-5;
        let mut worst = 0.0_f64;
        for k in 0..p.len() {
            let x = p.theta[k];
            p.theta[k] = x + h;
            let up = loss(&p);
            p.theta[k] = x - h;
            let down = loss(&p);
            p.theta[k] = x;
            let fd = (up - down) / (2.0 * h);
            let scale = grad[k].abs().max(fd.abs()).max(1e-4 * l0.abs().max(1.0));
            worst = worst.max((grad[k] - fd).abs() / scale);
        }
        return if worst < 1e-5 {
            Ok(format!("{} parameters, worst relative error {worst:e}", p.len()))
        } else {
            Err(format!("relative error {worst:e}"))
        };
    }
    Err("no generic point found".into())
}

/// Best basic feasible objective by enumerating column subsets.
fn enumerate_vertices(p: &LpProblem) -> Option<f64> {
    let n = p.n_vars();
    let rank = p.a.clone().svd(false, false).rank(1e-9);
    let b = DVector::from_column_slice(&p.b);
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != rank {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let sub = DMatrix::from_fn(p.n_rows(), rank, |i, k| p.a[(i, cols[k])]);
        let svd = sub.clone().svd(true, true);
        if svd.rank(1e-9) < rank {
            continue;
        }
        let x = svd.solve(&b, 1e-12).ok()?;
        if (&sub * &x - &b).amax() > 1e-9 || x.iter().any(|v| *v < -1e-9) {
            continue;
        }
        let v: f64 = cols.iter().zip(x.iter()).map(|(j, x)| p.c[*j] * x).sum();
        best = Some(best.map_or(v, |b: f64| b.max(v)));
    }
    best
}

fn simplex_vs_enumeration(rng: &mut ChaCha8Rng, cases: usize) -> Result<String, String> {
    let mut optimal = 0;
    for case in 0..cases {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=4usize.min(n));
        let mut a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-3..=3) as f64);
        a.row_mut(m - 1).fill(1.0);
        let b: Vec<f64> = (0..m).map(|i| if i == m - 1 { 1.0 } else { rng.random_range(-1.0..1.0) }).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = LpProblem::new(c, a, b).map_err(|e| e.to_string())?;
        let s = simplex_solve(&p).map_err(|e| e.to_string())?;
        match (&s.status, enumerate_vertices(&p)) {
            (LpStatus::Optimal, Some(v)) => {
                if (s.objective - v).abs() > 1e-9 || kkt(&p, &s).max() > 1e-9 {
                    return Err(format!("case {case}: {} vs {v}", s.objective));
                }
                optimal += 1;
            }
            (LpStatus::Infeasible, None) => {}
            (status, oracle) => return Err(format!("case {case}: {status:?} vs {oracle:?}")),
        }
    }
    Ok(format!("{cases} programs, {optimal} optimal"))
}

fn access_guard() -> Result<String, String> {
    let cfg = SyntheticConfig {
        n_currencies: 4,
        n_days: 40,
        ..Default::default()
    };
    let s = generate_synthetic(&cfg).map_err(|e| e.to_string())?;
    let market = Market::prepare(s.calendar, s.fx, s.ir, &CleaningConfig::default()).map_err(|e| e.to_string())?;
    let h = MarketHistory::new(&market);
    let v = h.view(30);
    let past = v.rate(29, 0, 1).map_err(|e| e.to_string())?;
    let blocked = [v.rate(30, 0, 1).err(), v.log_value(31, 0).err(), v.daily_ir(30, 0).err()];
    if past.is_none() {
        return Err("past rate unreadable".into());
    }
    if blocked.iter().all(|e| matches!(e, Some(Error::Leakage { .. }))) {
        Ok("reads at or after the decision date are rejected".into())
    } else {
        Err(format!("{blocked:?}"))
    }
}

/// Runs every check; cheap enough for a command-line gate (a few seconds).
pub fn run_battery(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check("currency values: inconsistent triangle", currency_value_triangle()),
        check("projector: symmetric, idempotent, in kernel", projection_laws(&mut rng, 300)),
        check("trade map: feasibility and round trip", h_so_feasibility(&mut rng, 300)),
        check("trading loss: hand cases", loss_hand_cases()),
        check("network gradient: finite differences", gnn_gradient(&mut rng)),
        check("simplex: vertex enumeration", simplex_vs_enumeration(&mut rng, 300)),
        check("history: look-ahead guard", access_guard()),
    ]
}
