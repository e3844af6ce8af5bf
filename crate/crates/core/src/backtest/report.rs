//! Delimited text renderings of a backtest report.

use std::fmt::Write as _;

use super::engine::{BacktestReport, StrategyReport};
use super::metrics::fmt_metric;

fn num(v: f64) -> String {
    format!("{v:?}")
}

impl BacktestReport {
    /// One row per strategy.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from(
            "strategy,n_days,n_traded,information_ratio,sortino,annual_return,annual_vol,mdd,total_gain,mean_holdings,mean_hhi\n",
        );
        for r in &self.strategies {
            let m = &r.summary;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.strategy.name(),
                m.n_days,
                m.n_traded,
                fmt_metric(m.information_ratio),
                fmt_metric(m.sortino),
                fmt_metric(m.annual_return),
                fmt_metric(m.annual_vol),
                num(m.mdd),
                num(m.total_gain),
                fmt_metric(m.mean_holdings),
                fmt_metric(m.mean_hhi),
            );
        }
        s
    }

    pub fn daily_csv(&self) -> String {
        let mut s = String::from(
            "date,t,strategy,k,evaluable,degenerate,gain,cum_gain,holdings_abs,hhi,predicted_gain,n_links,sum_w,max_abs_h,max_direct,violation\n",
        );
        for r in &self.strategies {
            let mut cum = 0.0;
            for d in &r.records {
                if d.evaluable {
                    cum += d.gain;
                }
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    d.date,
                    d.t,
                    d.strategy.name(),
                    d.k,
                    d.evaluable,
                    d.degenerate,
                    num(d.gain),
                    num(cum),
                    num(d.holdings_abs),
                    num(d.hhi),
                    num(d.predicted_gain),
                    d.n_links,
                    num(d.sum_w),
                    num(d.max_abs_h),
                    num(d.max_direct),
                    d.violation.as_deref().unwrap_or("").replace(',', ";"),
                );
            }
        }
        s
    }

    /// Rolling 365-day information ratio and mean holdings per strategy.
    pub fn rolling_csv(&self) -> String {
        let mut s = String::from("date,strategy,rolling_ir,rolling_holdings\n");
        for r in &self.strategies {
            rolling_rows(&mut s, r);
        }
        s
    }

    pub fn refits_csv(&self) -> String {
        let mut s = String::from(
            "k,t_k,date,fxrp_val_mse,fxrp_test_mse,random_walk_test_mse,fxrp_budget,fxrp_layers,fxsa_val_loss,fxsa_budget,fxsa_layers,fxsa_train_dates\n",
        );
        for r in &self.refits {
            let best = |g: &[crate::neural::GridResult]| {
                crate::neural::select_best(g).map(|i| (g[i].point.budget.to_string(), g[i].point.layers.to_string()))
            };
            let (pb, pl) = best(&r.fxrp_grid).unwrap_or_default();
            let (sb, sl) = best(&r.fxsa_grid).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.k,
                r.t_k,
                r.date,
                num(r.fxrp_val_mse),
                fmt_metric(r.fxrp_test_mse),
                fmt_metric(r.random_walk_test_mse),
                pb,
                pl,
                fmt_metric(r.fxsa_val_loss),
                sb,
                sl,
                r.fxsa_train_dates,
            );
        }
        s
    }
}

fn rolling_rows(s: &mut String, r: &StrategyReport) {
    for ((d, ir), (_, h)) in r.rolling_ir.iter().zip(&r.rolling_holdings) {
        let _ = writeln!(s, "{},{},{},{}", d, r.strategy.name(), fmt_metric(*ir), fmt_metric(*h));
    }
}
