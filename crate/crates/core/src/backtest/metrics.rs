//! Performance statistics of a daily gain series. Ratios with a zero
//! denominator (or too few observations) come back as `None`.

use chrono::{Duration, NaiveDate};

/// Trading days per year used to annualize daily statistics.
pub const TRADING_DAYS: f64 = 252.0;

pub fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

/// Unbiased standard deviation; exactly 0 when the spread is at rounding
/// level (the mean of a constant series is not always that constant).
pub fn std_dev(x: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let m = mean(x)?;
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let s = (ss / (x.len() - 1) as f64).sqrt();
    let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    Some(if s <= 8.0 * f64::EPSILON * scale { 0.0 } else { s })
}

/// `mean / std * sqrt(periods)` against a zero benchmark.
pub fn information_ratio(gains: &[f64], periods: f64) -> Option<f64> {
    let s = std_dev(gains)?;
    (s > 0.0).then(|| mean(gains).unwrap() / s * periods.sqrt())
}

/// `mean / sqrt(mean(min(g, 0)^2)) * sqrt(periods)`.
pub fn sortino(gains: &[f64], periods: f64) -> Option<f64> {
    let m = mean(gains)?;
    let down = (gains.iter().map(|g| g.min(0.0).powi(2)).sum::<f64>() / gains.len() as f64).sqrt();
    (down > 0.0).then(|| m / down * periods.sqrt())
}

pub fn annual_return(gains: &[f64], periods: f64) -> Option<f64> {
    mean(gains).map(|m| m * periods)
}

pub fn annual_vol(gains: &[f64], periods: f64) -> Option<f64> {
    std_dev(gains).map(|s| s * periods.sqrt())
}

/// Largest peak-to-trough drop of the cumulative-sum path starting at 0.
pub fn max_drawdown(gains: &[f64]) -> f64 {
    let mut level = 0.0_f64;
    let mut peak = 0.0_f64;
    let mut worst = 0.0_f64;
    for g in gains {
        level += g;
        peak = peak.max(level);
        worst = worst.max(peak - level);
    }
    worst
}

/// Running sum, one entry per gain.
pub fn cumulative(gains: &[f64]) -> Vec<f64> {
    gains
        .iter()
        .scan(0.0, |s, g| {
            *s += g;
            Some(*s)
        })
        .collect()
}

/// Applies `f` at every date to the values dated in `(date - window_days, date]`.
/// `dates` must be increasing.
pub fn rolling<F>(dates: &[NaiveDate], values: &[f64], window_days: i64, f: F) -> Vec<(NaiveDate, Option<f64>)>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let mut out = Vec::with_capacity(dates.len());
    let mut lo = 0;
    for (hi, &d) in dates.iter().enumerate() {
        let start = d - Duration::days(window_days);
        while dates[lo] <= start {
            lo += 1;
        }
        out.push((d, f(&values[lo..=hi])));
    }
    out
}

/// `NA` for undefined values.
pub fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gains_have_no_ratio() {
        let g = [0.01; 10];
        assert_eq!(information_ratio(&g, TRADING_DAYS), None);
        assert_eq!(sortino(&g, TRADING_DAYS), None);
        assert_eq!(fmt_metric(None), "NA");
    }

    #[test]
    fn alternating_gains() {
        let g = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(information_ratio(&g, TRADING_DAYS), Some(0.0));
        assert_eq!(max_drawdown(&g), 1.0);
    }

    #[test]
    fn drawdown_on_hand_path() {
        let g = [1.0, 2.0, -1.0, 2.0];
        assert_eq!(cumulative(&g), vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(max_drawdown(&g), 1.0);
        assert_eq!(max_drawdown(&[-2.0, 1.0]), 2.0);
    }

    #[test]
    fn sortino_uses_downside_only() {
        let g = [0.02, -0.01, 0.03, -0.02];
        let down = ((0.01f64.powi(2) + 0.02f64.powi(2)) / 4.0).sqrt();
        let want = 0.005 / down * TRADING_DAYS.sqrt();
        assert!((sortino(&g, TRADING_DAYS).unwrap() - want).abs() < 1e-12);
        assert!((annual_return(&g, TRADING_DAYS).unwrap() - 0.005 * 252.0).abs() < 1e-12);
    }

    #[test]
    fn rolling_window_is_half_open_in_calendar_days() {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = [d0, d0 + Duration::days(200), d0 + Duration::days(365), d0 + Duration::days(366)];
        let vals = [1.0, 2.0, 3.0, 4.0];
        let counts = rolling(&dates, &vals, 365, |w| Some(w.len() as f64));
        let n: Vec<f64> = counts.iter().map(|(_, v)| v.unwrap()).collect();
        assert_eq!(n, vec![1.0, 2.0, 2.0, 3.0]);
        let sums = rolling(&dates, &vals, 365, |w| Some(w.iter().sum()));
        assert_eq!(sums[3].1, Some(9.0));
    }
}
