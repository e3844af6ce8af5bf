//! Walk-forward refit dates and the per-refit train/validation splits.

use std::ops::Range;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::TradingCalendar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// The first refit is the first trading date on or after this day.
    pub start: NaiveDate,
    pub refit_months: u32,
    pub n_fit: usize,
    pub n_sy: usize,
    /// Trailing share of `[t0, t_k)` held out when no covering block applies.
    pub val_fraction: f64,
    /// Execution delay as a fraction of a day. Informational: decisions for
    /// day `t` only ever see data through `t - 1`.
    pub t_exec: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2020, 7, 1).unwrap(),
            refit_months: 3,
            n_fit: 8,
            n_sy: 2,
            val_fraction: 0.2,
            t_exec: 0.5,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("schedule: {m}")));
        if self.refit_months == 0 {
            return bad("refit_months must be positive".into());
        }
        // With a single covering block the first refit would validate on all of
        // [t0, t1) and have nothing left to train on.
        if !(2 <= self.n_sy && self.n_sy < self.n_fit) {
            return bad(format!("need 2 <= n_sy < n_fit, got n_sy={} n_fit={}", self.n_sy, self.n_fit));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad(format!("val_fraction {} must lie in (0, 1)", self.val_fraction));
        }
        if !(self.t_exec > 0.0 && self.t_exec < 1.0) {
            return bad(format!("t_exec {} must lie in (0, 1)", self.t_exec));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSchedule {
    pub t0: usize,
    /// `t_1 .. t_{n_fit}`.
    pub refits: Vec<usize>,
    /// Last trading date.
    pub end: usize,
    pub n_sy: usize,
    pub val_fraction: f64,
    pub t_exec: f64,
}

pub fn build_schedule(calendar: &TradingCalendar, cfg: &ScheduleConfig) -> Result<FitSchedule> {
    cfg.validate()?;
    let mut refits = Vec::with_capacity(cfg.n_fit);
    for k in 0..cfg.n_fit {
        let months = cfg.refit_months * k as u32;
        let day = cfg
            .start
            .checked_add_months(Months::new(months))
            .ok_or_else(|| Error::Schedule(format!("date overflow at refit {}", k + 1)))?;
        let t = calendar.first_on_or_after(day).ok_or_else(|| {
            Error::Schedule(format!(
                "calendar ends before refit {} ({day}); the horizon is shorter than {} refits",
                k + 1,
                cfg.n_fit
            ))
        })?;
        if refits.last().is_some_and(|&p| p >= t) {
            return Err(Error::Schedule(format!("refit dates not increasing at k={}", k + 1)));
        }
        refits.push(t);
    }
    if refits[0] <= 1 {
        return Err(Error::Schedule("the first refit leaves no history before it".into()));
    }
    Ok(FitSchedule {
        t0: 1,
        refits,
        end: calendar.len(),
        n_sy: cfg.n_sy,
        val_fraction: cfg.val_fraction,
        t_exec: cfg.t_exec,
    })
}

impl FitSchedule {
    pub fn n_fit(&self) -> usize {
        self.refits.len()
    }

    /// `t_k` for `k` in `1..=n_fit`.
    pub fn refit(&self, k: usize) -> usize {
        self.refits[k - 1]
    }

    pub fn t1(&self) -> usize {
        self.refits[0]
    }

    /// `[t_k, t_{k+1})`, the last one running to the end of the calendar.
    pub fn test_period(&self, k: usize) -> Range<usize> {
        let hi = self.refits.get(k).copied().unwrap_or(self.end + 1);
        self.refit(k)..hi
    }

    /// The refit whose test period contains `t`.
    pub fn test_refit(&self, t: usize) -> Option<usize> {
        if t < self.t1() || t > self.end {
            return None;
        }
        Some(self.refits.partition_point(|&r| r <= t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Prediction,
    Trading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub k: usize,
    pub stage: Stage,
    pub train: Vec<Range<usize>>,
    pub val: Vec<Range<usize>>,
}

fn contains(ranges: &[Range<usize>], t: usize) -> bool {
    ranges.iter().any(|r| r.contains(&t))
}

impl Split {
    pub fn is_train(&self, t: usize) -> bool {
        contains(&self.train, t)
    }

    pub fn is_val(&self, t: usize) -> bool {
        contains(&self.val, t)
    }

    pub fn train_dates(&self) -> impl Iterator<Item = usize> + '_ {
        self.train.iter().flat_map(|r| r.clone())
    }

    pub fn val_dates(&self) -> impl Iterator<Item = usize> + '_ {
        self.val.iter().flat_map(|r| r.clone())
    }
}

/// Block `k` of `n_sy` equal consecutive blocks of `[t0, t1)`.
pub fn covering_block(schedule: &FitSchedule, k: usize) -> Range<usize> {
    let len = schedule.t1() - schedule.t0;
    let n = schedule.n_sy;
    let lo = schedule.t0 + (k - 1) * len / n;
    let hi = schedule.t0 + k * len / n;
    lo..hi
}

/// Train and validation periods for refit `k`; together they tile `[t0, t_k)`.
///
/// Prediction-stage refits `k <= n_sy` validate on covering block `k` so every
/// pre-test date is out-of-sample for some refit; all others hold out the
/// trailing `val_fraction`.
pub fn make_splits(schedule: &FitSchedule, stage: Stage, k: usize) -> Result<Split> {
    if k == 0 || k > schedule.n_fit() {
        return Err(Error::Schedule(format!("refit index {k} outside 1..={}", schedule.n_fit())));
    }
    let t0 = schedule.t0;
    let tk = schedule.refit(k);
    let (train, val) = if stage == Stage::Prediction && k <= schedule.n_sy {
        let block = covering_block(schedule, k);
        let train = [t0..block.start, block.end..tk]
            .into_iter()
            .filter(|r| !r.is_empty())
            .collect();
        (train, vec![block])
    } else {
        let len = tk - t0;
        let n_val = ((schedule.val_fraction * len as f64).round() as usize).clamp(1, len);
        let cut = tk - n_val;
        // One range each; the Vec shape matches the covering-block case.
        #[allow(clippy::single_range_in_vec_init)]
        let split = (if cut > t0 { vec![t0..cut] } else { Vec::new() }, vec![cut..tk]);
        split
    };
    Ok(Split { k, stage, train, val })
}

/// `k*(t)`: the first refit whose prediction-stage validation period holds `t`.
pub fn k_star(schedule: &FitSchedule, t: usize) -> Option<usize> {
    (1..=schedule.n_fit()).find(|&k| {
        make_splits(schedule, Stage::Prediction, k)
            .map(|s| s.is_val(t))
            .unwrap_or(false)
    })
}
