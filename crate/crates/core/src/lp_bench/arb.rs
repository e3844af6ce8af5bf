//! The deterministic arbitrage LP on the same predictions the network trades on.
//!
//! maximize   sum_i carry_i X'_io H_i
//! subject to H_i = 0 for every traded currency i != o
//!            sum w = 1,  w >= 0
//!
//! with `H` the predicted holdings of [`holdings_hat`](crate::statarb::holdings_hat).

use nalgebra::DMatrix;

use super::simplex::{simplex_solve, LpProblem, LpSolution, LpStatus};
use crate::error::Result;
use crate::fx_graph::RateMatrix;
use crate::statarb::{certificates, holdings_hat, TradableLinks, TradePlan, DEGENERATE_FLOOR};

/// Carry factors of 1 for every currency (zero interest-rate differentials).
pub fn unit_carry(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Predicted present value per unit of `w` on each link:
/// `X'_oa (carry_b X'_bo X'_ab - carry_a X'_ao)`.
pub fn predicted_gain_coefficients(links: &TradableLinks, xp: &RateMatrix, carry: &[f64]) -> Vec<f64> {
    let o = links.home();
    let pv = |i: usize| carry[i] * xp.at(i, o);
    links
        .links()
        .iter()
        .map(|&(a, b)| xp.at(o, a) * (pv(b) * xp.at(a, b) - pv(a)))
        .collect()
}

/// `sum_i carry_i X'_io H_i` for weights `w`.
pub fn predicted_gain(w: &[f64], links: &TradableLinks, xp: &RateMatrix, carry: &[f64]) -> f64 {
    let o = links.home();
    holdings_hat(w, links, xp)
        .iter()
        .enumerate()
        .filter(|(_, h)| **h != 0.0)
        .map(|(i, h)| carry[i] * xp.at(i, o) * h)
        .sum()
}

pub fn arbitrage_problem(links: &TradableLinks, xp: &RateMatrix, carry: &[f64], names: &[String]) -> LpProblem {
    let o = links.home();
    let d = links.len();
    let flow: Vec<usize> = links.currencies().into_iter().filter(|&i| i != o).collect();
    let mut a = DMatrix::zeros(flow.len() + 1, d);
    for (k, &(x, y)) in links.links().iter().enumerate() {
        let spent = xp.at(o, x);
        if let Some(r) = flow.iter().position(|&i| i == x) {
            a[(r, k)] -= spent;
        }
        if let Some(r) = flow.iter().position(|&i| i == y) {
            a[(r, k)] += xp.at(x, y) * spent;
        }
        a[(flow.len(), k)] = 1.0;
    }
    let mut b = vec![0.0; flow.len() + 1];
    b[flow.len()] = 1.0;
    let name = |i: usize| names.get(i).cloned().unwrap_or_else(|| format!("C{i}"));
    let col_names = links
        .links()
        .iter()
        .enumerate()
        .map(|(k, _)| format!("W{k}"))
        .collect();
    let mut row_names: Vec<String> = flow.iter().map(|&i| format!("H_{}", name(i))).collect();
    row_names.push("BUDGET".into());
    LpProblem {
        c: predicted_gain_coefficients(links, xp, carry),
        a,
        b,
        col_names,
        row_names,
    }
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub plan: TradePlan,
    pub value: f64,
    pub solution: LpSolution,
}

/// Solves the arbitrage LP for date `t`. Empty link sets, infeasible programs
/// and optima with no positive predicted gain come back as degenerate plans.
pub fn arbitrage_lp(t: usize, links: &TradableLinks, xp: &RateMatrix, carry: &[f64]) -> Result<LpOutcome> {
    if links.is_empty() {
        return Ok(LpOutcome {
            plan: TradePlan::degenerate(t, links, "no tradable links"),
            value: 0.0,
            solution: LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: 0.0,
                duals: Vec::new(),
                redundant_rows: Vec::new(),
                pivots: 0,
                residual: 0.0,
            },
        });
    }
    let problem = arbitrage_problem(links, xp, carry, &[]);
    let solution = simplex_solve(&problem)?;
    if !solution.is_optimal() {
        let plan = TradePlan::degenerate(t, links, format!("LP status {:?}", solution.status));
        return Ok(LpOutcome {
            plan,
            value: 0.0,
            solution,
        });
    }
    // The flow rows are homogeneous, so renormalizing keeps them satisfied
    // and puts the budget at 1 to rounding.
    let total: f64 = solution.x.iter().sum();
    let w: Vec<f64> = solution.x.iter().map(|v| v / total).collect();
    let value = predicted_gain(&w, links, xp, carry);
    if solution.objective <= DEGENERATE_FLOOR {
        let plan = TradePlan::degenerate(t, links, "no predicted arbitrage");
        return Ok(LpOutcome {
            plan,
            value: solution.objective.max(0.0),
            solution,
        });
    }
    let cert = certificates(&w, links, xp);
    let plan = TradePlan {
        t,
        links: links.links().to_vec(),
        w,
        u: Vec::new(),
        positive_sum: total,
        degenerate: false,
        reason: None,
        cert,
    };
    Ok(LpOutcome { plan, value, solution })
}
