use std::fmt::Write as _;

use super::links::TradableLinks;
use super::system::ConstraintSystem;
use crate::error::{Error, Result};
use crate::fx_graph::{MarketHistory, RateMatrix};

/// Below this total positive mass a projected vector yields no trade.
pub const DEGENERATE_FLOOR: f64 = 1e-12;

/// Projected entries below this fraction of the largest one are set to 0.
pub const PROJECTION_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Certificates {
    pub sum_w: f64,
    /// `max w_ij * w_ji` over reciprocal pairs.
    pub max_direct: f64,
    /// `max |H_i|` over non-home currencies, with predicted rates.
    pub max_abs_h: f64,
    /// Projected components that were exactly 0.
    pub zero_hits: usize,
}

/// Daily trade weights on `U'_t`, in home-currency units.
#[derive(Debug, Clone, PartialEq)]
pub struct TradePlan {
    pub t: usize,
    pub links: Vec<(usize, usize)>,
    pub w: Vec<f64>,
    /// Projected raw outputs `u = P u'` (empty for plans not produced by projection).
    pub u: Vec<f64>,
    pub positive_sum: f64,
    pub degenerate: bool,
    pub reason: Option<String>,
    pub cert: Certificates,
}

impl TradePlan {
    pub fn degenerate(t: usize, links: &TradableLinks, reason: impl Into<String>) -> Self {
        Self {
            t,
            links: links.links().to_vec(),
            w: vec![0.0; links.len()],
            u: Vec::new(),
            positive_sum: 0.0,
            degenerate: true,
            reason: Some(reason.into()),
            cert: Certificates::default(),
        }
    }

    pub fn with_date(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    /// Herfindahl index `sum w^2`.
    pub fn hhi(&self) -> f64 {
        self.w.iter().map(|w| w * w).sum()
    }

    /// Line records `t,i,j,w,degenerate,cert_sum,cert_maxH` for the positive weights
    /// (a single row with empty `i,j` for a degenerate plan).
    pub fn to_records(&self, names: &[String]) -> String {
        let mut s = String::new();
        if self.degenerate {
            let _ = writeln!(s, "{},,,0,true,0,0", self.t);
            return s;
        }
        for (k, &(i, j)) in self.links.iter().enumerate() {
            if self.w[k] > 0.0 {
                let _ = writeln!(
                    s,
                    "{},{},{},{:?},false,{:?},{:?}",
                    self.t, names[i], names[j], self.w[k], self.cert.sum_w, self.cert.max_abs_h
                );
            }
        }
        s
    }
}

/// `H_i = sum_j X'_ji X'_oj w_ji - sum_j X'_oi w_ij` with predicted rates.
pub fn holdings_hat(w: &[f64], links: &TradableLinks, xp: &RateMatrix) -> Vec<f64> {
    let o = links.home();
    let mut h = vec![0.0; links.n_currencies()];
    for (k, &(a, b)) in links.links().iter().enumerate() {
        if w[k] == 0.0 {
            continue;
        }
        let spent = xp.at(o, a) * w[k];
        h[b] += xp.at(a, b) * spent;
        h[a] -= spent;
    }
    h
}

pub fn certificates(w: &[f64], links: &TradableLinks, xp: &RateMatrix) -> Certificates {
    let h = holdings_hat(w, links, xp);
    let max_abs_h = h
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != links.home())
        .fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
    let mut max_direct = 0.0_f64;
    for (k, &(a, b)) in links.links().iter().enumerate() {
        if a < b {
            let back = links.index_of(b, a).expect("closed under reversal");
            max_direct = max_direct.max(w[k] * w[back]);
        }
    }
    Certificates {
        sum_w: w.iter().sum(),
        max_direct,
        max_abs_h,
        zero_hits: 0,
    }
}

/// Projects raw outputs onto the constraint kernel and normalizes the positive part.
pub fn h_so(system: &ConstraintSystem, u_raw: &[f64]) -> Result<TradePlan> {
    let d = system.n_links();
    if u_raw.len() != d {
        return Err(Error::Dimension(format!("{} raw outputs for {} links", u_raw.len(), d)));
    }
    if u_raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("non-finite raw output".into()));
    }
    let mut u = system.project(u_raw);
    // Entries at rounding level are zero in exact arithmetic; left alone they can
    // make both directions of a pair slightly positive.
    let noise = PROJECTION_NOISE * u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for v in u.iter_mut() {
        if v.abs() <= noise {
            *v = 0.0;
        }
    }
    let positive_sum: f64 = u.iter().filter(|v| **v > 0.0).sum();
    if positive_sum <= DEGENERATE_FLOOR {
        let mut p = TradePlan::degenerate(0, &system.links, "no positive projected mass");
        p.u = u;
        p.positive_sum = positive_sum;
        return Ok(p);
    }
    let w: Vec<f64> = u.iter().map(|v| if *v > 0.0 { v / positive_sum } else { 0.0 }).collect();
    let mut cert = certificates(&w, &system.links, &system.xp);
    cert.zero_hits = u.iter().filter(|v| **v == 0.0).count();
    Ok(TradePlan {
        t: 0,
        links: system.links.links().to_vec(),
        w,
        u,
        positive_sum,
        degenerate: false,
        reason: None,
        cert,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct C1Report {
    pub sum_error: f64,
    /// Smallest weight, capped above at 0.
    pub min_weight: f64,
    pub max_direct: f64,
    pub max_abs_h: f64,
    pub h_tolerance: f64,
}

impl C1Report {
    pub fn ok(&self) -> bool {
        self.sum_error <= 1e-12 && self.min_weight >= 0.0 && self.max_direct == 0.0 && self.max_abs_h <= self.h_tolerance
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.sum_error > 1e-12 {
            v.push(format!("weights sum off by {:e}", self.sum_error));
        }
        if self.min_weight < 0.0 {
            v.push(format!("negative weight {:e}", self.min_weight));
        }
        if self.max_direct != 0.0 {
            v.push(format!("both directions of a pair traded ({:e})", self.max_direct));
        }
        if self.max_abs_h > self.h_tolerance {
            v.push(format!("non-home holding {:e} above {:e}", self.max_abs_h, self.h_tolerance));
        }
        v
    }
}

/// Checks budget, nonnegativity, no direct round trips and flow conservation.
pub fn verify_c1(w: &[f64], links: &TradableLinks, xp: &RateMatrix) -> C1Report {
    let c = certificates(w, links, xp);
    C1Report {
        sum_error: (c.sum_w - 1.0).abs(),
        min_weight: w.iter().copied().fold(0.0, f64::min),
        max_direct: c.max_direct,
        max_abs_h: c.max_abs_h,
        h_tolerance: 1e-9 * xp.max_abs().max(1.0),
    }
}

/// Builds a kernel vector whose normalized positive part is `w`:
/// `u_ij = w_ij` where `w_ij > 0`, else `-(X'_oj X'_ji / X'_oi) w_ji`.
pub fn c1_to_u(w: &[f64], links: &TradableLinks, xp: &RateMatrix) -> Result<Vec<f64>> {
    let report = verify_c1(w, links, xp);
    if !report.ok() {
        return Err(Error::Precondition(format!(
            "plan is not in the feasible set: {}",
            report.violations().join("; ")
        )));
    }
    let o = links.home();
    Ok(links
        .links()
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            if w[k] > 0.0 {
                w[k]
            } else {
                let back = links.index_of(j, i).expect("closed under reversal");
                -(xp.at(o, j) * xp.at(j, i) / xp.at(o, i)) * w[back]
            }
        })
        .collect())
}

/// Realized market data needed to score a plan dated `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub t: usize,
    /// `X_t,ab` per link.
    pub x_link: Vec<f64>,
    /// `(1 + Y_t,i) / (1 + Y_t,o)` per currency (NaN where unused).
    pub carry: Vec<f64>,
    /// `X_{t+1},i,o` per currency (NaN where unused).
    pub next_to_home: Vec<f64>,
    /// `X_t,i,o` per currency (NaN where unused).
    pub to_home: Vec<f64>,
}

impl Realization {
    /// Reads the realized rates for day `t`; `None` if any needed value is missing.
    pub fn from_history(history: &MarketHistory, t: usize, links: &TradableLinks) -> Option<Self> {
        let n = links.n_currencies();
        let o = links.home();
        let x_link = links
            .links()
            .iter()
            .map(|&(a, b)| history.rate(t, a, b))
            .collect::<Option<Vec<f64>>>()?;
        let mut carry = vec![f64::NAN; n];
        let mut next_to_home = vec![f64::NAN; n];
        let mut to_home = vec![f64::NAN; n];
        let y_o = history.daily_ir(t, o)?;
        for i in links.currencies() {
            carry[i] = (1.0 + history.daily_ir(t, i)?) / (1.0 + y_o);
            next_to_home[i] = history.rate(t + 1, i, o)?;
            to_home[i] = history.rate(t, i, o)?;
        }
        Some(Self {
            t,
            x_link,
            carry,
            next_to_home,
            to_home,
        })
    }

    /// `H~_i = sum_j X~_ji X'_oj w_ji - sum_j X'_oi w_ij`.
    pub fn holdings(&self, w: &[f64], links: &TradableLinks, xp: &RateMatrix) -> Vec<f64> {
        let o = links.home();
        let mut h = vec![0.0; links.n_currencies()];
        for (k, &(a, b)) in links.links().iter().enumerate() {
            if w[k] == 0.0 {
                continue;
            }
            let spent = xp.at(o, a) * w[k];
            h[b] += self.x_link[k] * spent;
            h[a] -= spent;
        }
        h
    }

    /// `G~ = sum_i carry_i X~_{t+1},i,o H~_i`.
    pub fn gain(&self, holdings: &[f64]) -> f64 {
        holdings
            .iter()
            .enumerate()
            .filter(|(_, h)| **h != 0.0)
            .map(|(i, h)| self.carry[i] * self.next_to_home[i] * h)
            .sum()
    }

    /// `sum_i |H~_i X~_t,i,o|`.
    pub fn holdings_abs(&self, holdings: &[f64]) -> f64 {
        holdings
            .iter()
            .enumerate()
            .filter(|(_, h)| **h != 0.0)
            .map(|(i, h)| (h * self.to_home[i]).abs())
            .sum()
    }

    /// `dG~/dw` per link; the realized gain is linear in `w`.
    pub fn coefficients(&self, links: &TradableLinks, xp: &RateMatrix) -> Vec<f64> {
        let o = links.home();
        links
            .links()
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                let pv = |i: usize| self.carry[i] * self.next_to_home[i];
                xp.at(o, a) * (pv(b) * self.x_link[k] - pv(a))
            })
            .collect()
    }
}

/// Gradient of `G = g . w(P u')` with respect to the raw outputs `u'`.
pub fn gain_gradient_raw(system: &ConstraintSystem, plan: &TradePlan, coef: &[f64]) -> Vec<f64> {
    if plan.degenerate {
        return vec![0.0; system.n_links()];
    }
    let g: f64 = coef.iter().zip(&plan.w).map(|(c, w)| c * w).sum();
    let du: Vec<f64> = plan
        .u
        .iter()
        .zip(coef)
        .map(|(u, c)| if *u > 0.0 { (c - g) / plan.positive_sum } else { 0.0 })
        .collect();
    system.project(&du)
}
