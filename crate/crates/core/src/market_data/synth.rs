//! Synthetic FX/IR market with planted currency values and arbitrage noise.
//!
//! Log currency values follow a random walk whose increments are AR(1):
//! `eps_t = signal_strength * eps_{t-1} + value_vol * z`. Each quoted rate is
//! `exp(logV_i - logV_j + alpha_ij)` with one `alpha ~ N(0, sigma_alpha^2)`
//! per unordered pair and day, so every reciprocal pair multiplies to one.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::calendar::TradingCalendar;
use super::panel::{FxPanel, IrPanel, MATURITIES};
use crate::error::{Error, Result};

const CODES: [&str; 10] = ["USD", "EUR", "JPY", "GBP", "AUD", "CAD", "CHF", "HKD", "SGD", "SEK"];

pub fn currency_codes(n: usize) -> Vec<String> {
    (0..n)
        .map(|k| CODES.get(k).map_or_else(|| format!("C{k:02}"), |c| c.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n_currencies: usize,
    pub n_days: usize,
    pub start: NaiveDate,
    pub sigma_alpha: f64,
    pub signal_strength: f64,
    /// Innovation std-dev of daily log-value increments.
    pub value_vol: f64,
    /// Mean level of annualized 1-year rates.
    pub ir_level: f64,
    /// Daily std-dev of 1-year rate changes.
    pub ir_vol: f64,
    /// Probability that any single quote or rate cell is missing.
    pub missing_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_currencies: 10,
            n_days: 2000,
            start: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
            sigma_alpha: 0.005,
            signal_strength: 0.3,
            value_vol: 0.006,
            ir_level: 0.02,
            ir_vol: 0.0002,
            missing_prob: 0.0,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic: {m}")));
        if self.n_currencies < 2 {
            return bad("need at least 2 currencies");
        }
        if self.n_days < 2 {
            return bad("need at least 2 days");
        }
        if !(self.sigma_alpha >= 0.0) {
            return bad("sigma_alpha must be >= 0");
        }
        if !(self.signal_strength.abs() < 1.0) {
            return bad("|signal_strength| must be < 1");
        }
        if !(self.value_vol >= 0.0 && self.ir_vol >= 0.0 && self.ir_level >= 0.0) {
            return bad("volatilities and levels must be >= 0");
        }
        if !(0.0..1.0).contains(&self.missing_prob) {
            return bad("missing_prob must be in [0, 1)");
        }
        Ok(())
    }
}

/// Planted state behind a synthetic market, indexed `[t][i]` (slot 0 unused).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub log_values: Vec<Vec<f64>>,
    pub increments: Vec<Vec<f64>>,
    /// `alpha[t][i * n + j]`, antisymmetric.
    pub alpha: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SyntheticMarket {
    pub calendar: TradingCalendar,
    pub fx: FxPanel,
    pub ir: IrPanel,
    pub truth: GroundTruth,
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticMarket> {
    cfg.validate()?;
    let n = cfg.n_currencies;
    let days = cfg.n_days;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std = Normal::new(0.0, 1.0).unwrap();

    let calendar = TradingCalendar::weekdays_from(cfg.start, days);
    let codes = currency_codes(n);
    let mut fx = FxPanel::new(codes.clone(), days);
    let mut ir = IrPanel::new(codes, days);

    let mut log_v: Vec<f64> = (0..n).map(|_| 0.5 * std.sample(&mut rng)).collect();
    let mut eps = vec![0.0; n];
    let mut level: Vec<f64> = (0..n)
        .map(|_| cfg.ir_level * (0.5 + rng.random::<f64>()))
        .collect();
    let slope: Vec<f64> = (0..n).map(|_| 0.004 * rng.random::<f64>()).collect();

    let mut truth = GroundTruth {
        log_values: vec![vec![0.0; n]],
        increments: vec![vec![0.0; n]],
        alpha: vec![vec![0.0; n * n]],
    };

    for t in 1..=days {
        for i in 0..n {
            eps[i] = cfg.signal_strength * eps[i] + cfg.value_vol * std.sample(&mut rng);
            log_v[i] += eps[i];
        }
        let mut alpha = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let a = cfg.sigma_alpha * std.sample(&mut rng);
                alpha[i * n + j] = a;
                alpha[j * n + i] = -a;
                let x = (log_v[i] - log_v[j] + a).exp();
                let keep_fwd = rng.random::<f64>() >= cfg.missing_prob;
                let keep_rev = rng.random::<f64>() >= cfg.missing_prob;
                if keep_fwd {
                    fx.set(t, i, j, x);
                }
                if keep_rev {
                    fx.set(t, j, i, 1.0 / x);
                }
            }
        }
        for i in 0..n {
            level[i] = (level[i] + cfg.ir_vol * std.sample(&mut rng)).abs();
            for (m, years) in MATURITIES.iter().enumerate() {
                if rng.random::<f64>() >= cfg.missing_prob {
                    ir.set(t, i, m, level[i] + slope[i] * f64::from(*years).ln());
                }
            }
        }
        truth.log_values.push(log_v.clone());
        truth.increments.push(eps.clone());
        truth.alpha.push(alpha);
    }

    Ok(SyntheticMarket {
        calendar,
        fx,
        ir,
        truth,
    })
}
