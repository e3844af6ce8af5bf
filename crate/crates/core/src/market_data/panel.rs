use crate::error::{Error, Result};

/// Government-bond maturities carried by [`IrPanel`], in years.
pub const MATURITIES: [u32; 4] = [1, 2, 5, 10];

/// Days used to turn the 1-year rate into a per-day rate.
pub const DAYS_PER_YEAR: f64 = 365.0;

/// Dense FX-rate panel: `rate(t, i, j)` is units of `j` per unit of `i`.
///
/// Slot `t = 0` exists but is always empty, so `t - 1` lookups at the start
/// of the calendar need no special casing.
#[derive(Debug, Clone)]
pub struct FxPanel {
    currencies: Vec<String>,
    n_days: usize,
    rates: Vec<f64>,
}

impl FxPanel {
    pub fn new(currencies: Vec<String>, n_days: usize) -> Self {
        let n = currencies.len();
        Self {
            currencies,
            n_days,
            rates: vec![f64::NAN; (n_days + 1) * n * n],
        }
    }

    pub fn currencies(&self) -> &[String] {
        &self.currencies
    }

    pub fn n_currencies(&self) -> usize {
        self.currencies.len()
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn currency_index(&self, code: &str) -> Option<usize> {
        self.currencies.iter().position(|c| c == code)
    }

    #[inline]
    fn slot(&self, t: usize, i: usize, j: usize) -> usize {
        let n = self.currencies.len();
        (t * n + i) * n + j
    }

    #[inline]
    pub fn get(&self, t: usize, i: usize, j: usize) -> Option<f64> {
        if t > self.n_days {
            return None;
        }
        let v = self.rates[self.slot(t, i, j)];
        (!v.is_nan()).then_some(v)
    }

    pub fn set(&mut self, t: usize, i: usize, j: usize, rate: f64) {
        let s = self.slot(t, i, j);
        self.rates[s] = rate;
    }

    pub fn clear(&mut self, t: usize, i: usize, j: usize) {
        let s = self.slot(t, i, j);
        self.rates[s] = f64::NAN;
    }

    pub fn key(&self, t: usize, i: usize, j: usize) -> String {
        format!("t={t} {}/{}", self.currencies[i], self.currencies[j])
    }

    /// Number of stored observations.
    pub fn count(&self) -> usize {
        self.rates.iter().filter(|v| !v.is_nan()).count()
    }
}

/// Ordered pair quoted in one direction only at date `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneSided {
    pub t: usize,
    pub base: usize,
    pub quote: usize,
}

/// Replaces every reciprocal pair by the geometric mean of `X_ij` and `1/X_ji`.
///
/// Pairs quoted in one direction only are left untouched and returned as flags.
pub fn symmetrize_rates(panel: &FxPanel) -> Result<(FxPanel, Vec<OneSided>)> {
    let n = panel.n_currencies();
    let mut out = panel.clone();
    let mut flags = Vec::new();
    for t in 1..=panel.n_days() {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let fwd = panel.get(t, i, j);
                let rev = panel.get(t, j, i);
                for (v, (a, b)) in [(fwd, (i, j)), (rev, (j, i))] {
                    if let Some(v) = v {
                        if v <= 0.0 || !v.is_finite() {
                            return Err(Error::NonPositiveRate {
                                key: panel.key(t, a, b),
                                value: v,
                            });
                        }
                    }
                }
                match (fwd, rev) {
                    (Some(x), Some(y)) if i < j => {
                        let g = (x / y).sqrt();
                        out.set(t, i, j, g);
                        out.set(t, j, i, 1.0 / g);
                    }
                    (Some(_), None) => flags.push(OneSided {
                        t,
                        base: i,
                        quote: j,
                    }),
                    _ => {}
                }
            }
        }
    }
    Ok((out, flags))
}

/// Interest-rate panel: annualized decimal government-bond rates by maturity.
#[derive(Debug, Clone)]
pub struct IrPanel {
    currencies: Vec<String>,
    n_days: usize,
    rates: Vec<f64>,
}

impl IrPanel {
    pub fn new(currencies: Vec<String>, n_days: usize) -> Self {
        let n = currencies.len();
        Self {
            currencies,
            n_days,
            rates: vec![f64::NAN; (n_days + 1) * n * MATURITIES.len()],
        }
    }

    pub fn currencies(&self) -> &[String] {
        &self.currencies
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn maturity_slot(years: u32) -> Option<usize> {
        MATURITIES.iter().position(|m| *m == years)
    }

    #[inline]
    fn slot(&self, t: usize, i: usize, m: usize) -> usize {
        (t * self.currencies.len() + i) * MATURITIES.len() + m
    }

    /// Rate for maturity slot `m` (index into [`MATURITIES`]).
    #[inline]
    pub fn get(&self, t: usize, i: usize, m: usize) -> Option<f64> {
        if t > self.n_days {
            return None;
        }
        let v = self.rates[self.slot(t, i, m)];
        (!v.is_nan()).then_some(v)
    }

    pub fn set(&mut self, t: usize, i: usize, m: usize, rate: f64) {
        let s = self.slot(t, i, m);
        self.rates[s] = rate;
    }

    pub fn clear(&mut self, t: usize, i: usize, m: usize) {
        let s = self.slot(t, i, m);
        self.rates[s] = f64::NAN;
    }

    /// Per-day rate: the 1-year rate divided by 365.
    #[inline]
    pub fn daily_rate(&self, t: usize, i: usize) -> Option<f64> {
        self.get(t, i, 0).map(|r| r / DAYS_PER_YEAR)
    }
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Bitwise equality: missing cells compare equal to each other.
impl PartialEq for FxPanel {
    fn eq(&self, other: &Self) -> bool {
        self.currencies == other.currencies
            && self.n_days == other.n_days
            && bits_equal(&self.rates, &other.rates)
    }
}

impl PartialEq for IrPanel {
    fn eq(&self, other: &Self) -> bool {
        self.currencies == other.currencies
            && self.n_days == other.n_days
            && bits_equal(&self.rates, &other.rates)
    }
}
