//! Data-quality corrections, forward fills and maturity-curve imputation.

use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::calendar::TradingCalendar;
use super::panel::{FxPanel, IrPanel, MATURITIES};
use crate::error::{Error, Result};

/// Removes observations of one quoted pair inside a date range.
///
/// Values outside `[min, max]` are dropped; with neither bound set every
/// observation in the range is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutlierRule {
    pub base: String,
    pub quote: String,
    pub from: NaiveDate,
    pub to: NaiveDate,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleaningConfig {
    /// Trading days an FX quote may be carried forward in the value-solver shadow panel.
    pub fx_ffill_limit: usize,
    /// Trading days an interest rate may be carried forward.
    pub ir_ffill_limit: usize,
    /// Multipliers a mis-scaled quote may be off by (e.g. 10, 100, 10000).
    pub scale_factors: Vec<f64>,
    /// Currencies whose pairs are checked for mis-scaling; empty means all.
    pub scale_currencies: Vec<String>,
    pub outlier_rules: Vec<OutlierRule>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            fx_ffill_limit: 7,
            ir_ffill_limit: 30,
            scale_factors: Vec::new(),
            scale_currencies: Vec::new(),
            outlier_rules: Vec::new(),
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.scale_factors.iter().find(|f| !(**f > 1.0 && f.is_finite())) {
            return Err(Error::Config(format!("scale factor {f} must be finite and > 1")));
        }
        for r in &self.outlier_rules {
            if r.from > r.to {
                return Err(Error::Config(format!(
                    "outlier rule {}/{}: `from` after `to`",
                    r.base, r.quote
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CleaningAction {
    Rescale,
    Remove,
    ForwardFill,
    Impute,
    Unfilled,
}

impl CleaningAction {
    fn as_str(self) -> &'static str {
        match self {
            CleaningAction::Rescale => "rescale",
            CleaningAction::Remove => "remove",
            CleaningAction::ForwardFill => "ffill",
            CleaningAction::Impute => "impute",
            CleaningAction::Unfilled => "unfilled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningEntry {
    pub t: usize,
    pub field: String,
    pub action: CleaningAction,
    /// Value after the action (NaN when the cell was removed or left empty).
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningLog {
    pub entries: Vec<CleaningEntry>,
}

impl CleaningLog {
    fn push(&mut self, t: usize, field: String, action: CleaningAction, value: f64) {
        self.entries.push(CleaningEntry { t, field, action, value });
    }

    pub fn count(&self, action: CleaningAction) -> usize {
        self.entries.iter().filter(|e| e.action == action).count()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Line records `t,field,action,value`.
    pub fn to_records(&self) -> String {
        let mut s = String::from("t,field,action,value\n");
        for e in &self.entries {
            let v = if e.value.is_nan() { "NA".to_string() } else { format!("{:?}", e.value) };
            let _ = writeln!(s, "{},{},{},{}", e.t, e.field, e.action.as_str(), v);
        }
        s
    }
}

/// Output of [`clean_panels`].
#[derive(Debug, Clone)]
pub struct CleanedPanels {
    /// Observed FX quotes, never filled.
    pub fx: FxPanel,
    /// Forward-filled copy consumed only by the currency-value solver.
    pub fx_filled: FxPanel,
    pub ir: IrPanel,
    pub log: CleaningLog,
}

fn fx_field(p: &FxPanel, i: usize, j: usize) -> String {
    format!("fx:{}/{}", p.currencies()[i], p.currencies()[j])
}

fn ir_field(p: &IrPanel, i: usize, m: usize) -> String {
    format!("ir:{}:{}y", p.currencies()[i], MATURITIES[m])
}

/// Applies the configured scale corrections and outlier removals to raw quotes.
pub fn apply_corrections(
    fx: &mut FxPanel,
    cfg: &CleaningConfig,
    calendar: &TradingCalendar,
    log: &mut CleaningLog,
) -> Result<()> {
    cfg.validate()?;
    let n = fx.n_currencies();
    if !cfg.scale_factors.is_empty() {
        let watched: Vec<bool> = fx
            .currencies()
            .iter()
            .map(|c| cfg.scale_currencies.is_empty() || cfg.scale_currencies.contains(c))
            .collect();
        for i in 0..n {
            for j in 0..n {
                if i == j || !(watched[i] || watched[j]) {
                    continue;
                }
                let mut prev: Option<f64> = None;
                for t in 1..=fx.n_days() {
                    let Some(x) = fx.get(t, i, j) else { continue };
                    let mut fixed = x;
                    if let Some(p) = prev {
                        let lr = (x / p).ln();
                        for f in &cfg.scale_factors {
                            let lf = f.ln();
                            if (lr - lf).abs() < 0.25 * lf {
                                fixed = x / f;
                            } else if (lr + lf).abs() < 0.25 * lf {
                                fixed = x * f;
                            }
                        }
                    }
                    if fixed != x {
                        fx.set(t, i, j, fixed);
                        log.push(t, fx_field(fx, i, j), CleaningAction::Rescale, fixed);
                    }
                    prev = Some(fixed);
                }
            }
        }
    }
    for rule in &cfg.outlier_rules {
        let (Some(i), Some(j)) = (fx.currency_index(&rule.base), fx.currency_index(&rule.quote)) else {
            continue;
        };
        for t in 1..=fx.n_days() {
            let d = calendar.date(t);
            if d < rule.from || d > rule.to {
                continue;
            }
            let Some(x) = fx.get(t, i, j) else { continue };
            let out = match (rule.min, rule.max) {
                (None, None) => true,
                (lo, hi) => lo.is_some_and(|lo| x < lo) || hi.is_some_and(|hi| x > hi),
            };
            if out {
                fx.clear(t, i, j);
                log.push(t, fx_field(fx, i, j), CleaningAction::Remove, f64::NAN);
            }
        }
    }
    Ok(())
}

/// Forward-fills a series in place: a gap cell at `t` takes the last observed
/// value at `s` when `t - s <= limit`. Returns the filled indices.
fn ffill_series(values: &mut [Option<f64>], limit: usize) -> Vec<usize> {
    let mut filled = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for t in 0..values.len() {
        match values[t] {
            Some(v) => last = Some((t, v)),
            None => {
                if let Some((s, v)) = last {
                    if t - s <= limit {
                        values[t] = Some(v);
                        filled.push(t);
                    }
                }
            }
        }
    }
    filled
}

/// Least-squares line of rate on ln(maturity), evaluated at the missing maturities.
pub fn impute_on_log_maturity(known: &[(u32, f64)], at: u32) -> Option<f64> {
    if known.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = known.iter().map(|(m, _)| f64::from(*m).ln()).collect();
    let n = known.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = known.iter().map(|(_, r)| r).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(known).map(|(x, (_, r))| (x - mx) * (r - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(my + slope * (f64::from(at).ln() - mx))
}

/// Fills FX gaps into a shadow panel and repairs the interest-rate panel.
///
/// Observed cells are never altered.
pub fn clean_panels(fx: &FxPanel, ir: &IrPanel, cfg: &CleaningConfig) -> Result<CleanedPanels> {
    cfg.validate()?;
    let mut log = CleaningLog::default();
    let n = fx.n_currencies();
    let days = fx.n_days();

    let mut fx_filled = fx.clone();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut series: Vec<Option<f64>> = (1..=days).map(|t| fx.get(t, i, j)).collect();
            for k in ffill_series(&mut series, cfg.fx_ffill_limit) {
                let v = series[k].unwrap();
                fx_filled.set(k + 1, i, j, v);
                log.push(k + 1, fx_field(fx, i, j), CleaningAction::ForwardFill, v);
            }
        }
    }

    let mut ir_out = ir.clone();
    let n_ir = ir.currencies().len();
    for i in 0..n_ir {
        for m in 0..MATURITIES.len() {
            let mut series: Vec<Option<f64>> = (1..=ir.n_days()).map(|t| ir.get(t, i, m)).collect();
            for k in ffill_series(&mut series, cfg.ir_ffill_limit) {
                let v = series[k].unwrap();
                ir_out.set(k + 1, i, m, v);
                log.push(k + 1, ir_field(ir, i, m), CleaningAction::ForwardFill, v);
            }
        }
    }
    for t in 1..=ir.n_days() {
        for i in 0..n_ir {
            let known: Vec<(u32, f64)> = (0..MATURITIES.len())
                .filter_map(|m| ir_out.get(t, i, m).map(|r| (MATURITIES[m], r)))
                .collect();
            if known.len() == MATURITIES.len() || known.is_empty() {
                continue;
            }
            for m in 0..MATURITIES.len() {
                if ir_out.get(t, i, m).is_some() {
                    continue;
                }
                match impute_on_log_maturity(&known, MATURITIES[m]) {
                    Some(v) => {
                        ir_out.set(t, i, m, v);
                        log.push(t, ir_field(ir, i, m), CleaningAction::Impute, v);
                    }
                    None => log.push(t, ir_field(ir, i, m), CleaningAction::Unfilled, f64::NAN),
                }
            }
        }
    }

    Ok(CleanedPanels {
        fx: fx.clone(),
        fx_filled,
        ir: ir_out,
        log,
    })
}
