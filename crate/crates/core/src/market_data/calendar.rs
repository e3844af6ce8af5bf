use std::collections::HashMap;

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use crate::error::{Error, Result};

/// Weekday trading calendar. Trading-date indices start at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
    index: HashMap<NaiveDate, usize>,
}

pub fn is_weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

impl TradingCalendar {
    pub fn from_dates(dates: Vec<NaiveDate>) -> Result<Self> {
        for w in dates.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Config(format!(
                    "calendar dates must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let Some(d) = dates.iter().find(|d| is_weekend(**d)) {
            return Err(Error::Config(format!("calendar contains weekend date {d}")));
        }
        let index = dates.iter().enumerate().map(|(k, d)| (*d, k + 1)).collect();
        Ok(Self { dates, index })
    }

    /// All weekdays in `[start, end]`.
    pub fn weekdays(start: NaiveDate, end: NaiveDate) -> Self {
        let mut dates = Vec::new();
        let mut d = start;
        while d <= end {
            if !is_weekend(d) {
                dates.push(d);
            }
            d += Duration::days(1);
        }
        Self::from_dates(dates).expect("weekday sequence is valid")
    }

    /// The first `n` weekdays on or after `start`.
    pub fn weekdays_from(start: NaiveDate, n: usize) -> Self {
        let mut dates = Vec::with_capacity(n);
        let mut d = start;
        while dates.len() < n {
            if !is_weekend(d) {
                dates.push(d);
            }
            d += Duration::days(1);
        }
        Self::from_dates(dates).expect("weekday sequence is valid")
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Date of trading index `t` (1-based).
    pub fn date(&self, t: usize) -> NaiveDate {
        self.dates[t - 1]
    }

    pub fn index_of(&self, d: NaiveDate) -> Option<usize> {
        self.index.get(&d).copied()
    }

    /// Index of the first trading date on or after `d`.
    pub fn first_on_or_after(&self, d: NaiveDate) -> Option<usize> {
        let k = self.dates.partition_point(|x| *x < d);
        (k < self.dates.len()).then_some(k + 1)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
}
