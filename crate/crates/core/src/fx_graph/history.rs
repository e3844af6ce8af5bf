//! Per-date derived market state and the look-ahead access guard.

use super::links::LinkSet;
use super::values::currency_values;
use crate::error::{Error, Result};
use crate::market_data::Market;
use crate::par::{self, Exec};

/// Per-date link sets, log rates, currency values and daily rates.
///
/// Index 0 is an empty sentinel date so `t - 1` and `t - 2` are always valid.
#[derive(Debug, Clone)]
pub struct MarketHistory {
    n: usize,
    n_days: usize,
    edges: Vec<LinkSet>,
    links: Vec<LinkSet>,
    rates: Vec<f64>,
    log_values: Vec<f64>,
    daily_ir: Vec<f64>,
    /// Dates whose value graph (forward-filled) was disconnected.
    pub disconnected_value_dates: Vec<usize>,
}

impl MarketHistory {
    pub fn new(market: &Market) -> Self {
        Self::with_exec(market, Exec::default())
    }

    pub fn with_exec(market: &Market, exec: Exec) -> Self {
        let n = market.n_currencies();
        let n_days = market.n_days();
        let mut edges = vec![LinkSet::empty(n)];
        let mut rates = vec![f64::NAN; (n_days + 1) * n * n];
        for t in 1..=n_days {
            let mut e = LinkSet::empty(n);
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    if let Some(x) = market.fx.get(t, i, j) {
                        e.insert(i, j);
                        rates[(t * n + i) * n + j] = x;
                    }
                }
            }
            edges.push(e);
        }
        // Trailing empty slot answers queries past the calendar.
        edges.push(LinkSet::empty(n));
        let links: Vec<LinkSet> = edges.iter().map(LinkSet::reciprocal).collect();

        let solved = par::map_range(exec, n_days, |k| {
            let t = k + 1;
            let filled = &market.fx_filled;
            let mut e = LinkSet::empty(n);
            for i in 0..n {
                for j in 0..n {
                    if i != j && filled.get(t, i, j).is_some() {
                        e.insert(i, j);
                    }
                }
            }
            let l = e.reciprocal();
            currency_values(&l, |i, j| filled.get(t, i, j).unwrap().ln())
        });
        let mut log_values = vec![f64::NAN; (n_days + 1) * n];
        let mut disconnected_value_dates = Vec::new();
        for (k, cv) in solved.iter().enumerate() {
            let t = k + 1;
            if !cv.is_connected() {
                disconnected_value_dates.push(t);
            }
            for i in 0..n {
                if !cv.isolated.contains(&i) {
                    log_values[t * n + i] = cv.log_values[i];
                }
            }
        }

        let mut daily_ir = vec![f64::NAN; (n_days + 1) * n];
        for t in 1..=n_days {
            for i in 0..n {
                if let Some(y) = market.ir.daily_rate(t, i) {
                    daily_ir[t * n + i] = y;
                }
            }
        }

        Self {
            n,
            n_days,
            edges,
            links,
            rates,
            log_values,
            daily_ir,
            disconnected_value_dates,
        }
    }

    pub fn n_currencies(&self) -> usize {
        self.n
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    fn in_range(&self, t: usize) -> bool {
        t <= self.n_days
    }

    /// `E_t`: all quoted directions.
    pub fn edges(&self, t: usize) -> &LinkSet {
        &self.edges[t.min(self.n_days + 1)]
    }

    /// `L_t`: mutually quoted pairs. Empty outside the calendar.
    pub fn links(&self, t: usize) -> LinkSet {
        self.links_ref(t).clone()
    }

    pub fn links_ref(&self, t: usize) -> &LinkSet {
        &self.links[t.min(self.n_days + 1)]
    }

    /// Realized rate `X_tij`.
    #[inline]
    pub fn rate(&self, t: usize, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return Some(1.0);
        }
        if !self.in_range(t) {
            return None;
        }
        let v = self.rates[(t * self.n + i) * self.n + j];
        (!v.is_nan()).then_some(v)
    }

    #[inline]
    pub fn log_value(&self, t: usize, i: usize) -> Option<f64> {
        if !self.in_range(t) {
            return None;
        }
        let v = self.log_values[t * self.n + i];
        (!v.is_nan()).then_some(v)
    }

    /// Per-day interest rate `Y_{t,1,i}`.
    #[inline]
    pub fn daily_ir(&self, t: usize, i: usize) -> Option<f64> {
        if !self.in_range(t) {
            return None;
        }
        let v = self.daily_ir[t * self.n + i];
        (!v.is_nan()).then_some(v)
    }

    /// Read-only view that refuses to reveal market values dated `>= decision`.
    pub fn view(&self, decision: usize) -> HistoryView<'_> {
        HistoryView { history: self, decision }
    }
}

/// Look-ahead guard for decisions taken at trading date `decision`.
///
/// Rates, currency values and interest rates are only readable strictly
/// before `decision`. The tradability masks `E_t`/`L_t` are readable up to and
/// including `decision`: which pairs quote at execution is known when trading.
#[derive(Debug, Clone, Copy)]
pub struct HistoryView<'a> {
    history: &'a MarketHistory,
    decision: usize,
}

impl<'a> HistoryView<'a> {
    pub fn decision(&self) -> usize {
        self.decision
    }

    pub fn n_currencies(&self) -> usize {
        self.history.n
    }

    fn check_past(&self, t: usize) -> Result<()> {
        if t >= self.decision {
            Err(Error::Leakage {
                requested: t,
                decision: self.decision,
            })
        } else {
            Ok(())
        }
    }

    fn check_mask(&self, t: usize) -> Result<()> {
        if t > self.decision {
            Err(Error::Leakage {
                requested: t,
                decision: self.decision,
            })
        } else {
            Ok(())
        }
    }

    pub fn rate(&self, t: usize, i: usize, j: usize) -> Result<Option<f64>> {
        self.check_past(t)?;
        Ok(self.history.rate(t, i, j))
    }

    pub fn log_rate(&self, t: usize, i: usize, j: usize) -> Result<Option<f64>> {
        Ok(self.rate(t, i, j)?.map(f64::ln))
    }

    pub fn log_value(&self, t: usize, i: usize) -> Result<Option<f64>> {
        self.check_past(t)?;
        Ok(self.history.log_value(t, i))
    }

    pub fn daily_ir(&self, t: usize, i: usize) -> Result<Option<f64>> {
        self.check_past(t)?;
        Ok(self.history.daily_ir(t, i))
    }

    pub fn links(&self, t: usize) -> Result<LinkSet> {
        self.check_mask(t)?;
        Ok(self.history.links(t))
    }

    pub fn links_ref(&self, t: usize) -> Result<&'a LinkSet> {
        self.check_mask(t)?;
        Ok(self.history.links_ref(t))
    }

    pub fn edges(&self, t: usize) -> Result<&'a LinkSet> {
        self.check_mask(t)?;
        Ok(self.history.edges(t))
    }
}
