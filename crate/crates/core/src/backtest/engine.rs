//! Walk-forward orchestration: refit both networks on schedule, trade each
//! test period with the frozen parameters, and score the GNN and LP plans.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::metrics::{self, TRADING_DAYS};
use crate::error::{Error, Result};
use crate::fx_graph::{HistoryView, MarketHistory};
use crate::fxrp::{
    build_schedule, evaluate_mse, make_splits, random_walk_mse, stitch_predictions, train_fxrp, FitSchedule,
    FxrpConfig, FxrpData, FxrpModel, PredictionStore, ScheduleConfig, Stage,
};
use crate::lp_bench::{arbitrage_lp, predicted_gain};
use crate::market_data::Market;
use crate::neural::{GnnParams, GridResult};
use crate::par::{self, Exec};
use crate::statarb::{
    decide_trades, train_fxsa, verify_c1, DayState, FxsaConfig, FxsaModel, FxsaSample, Realization, StateBook,
    TradableLinks, TradePlan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Gnn,
    Lp,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Gnn => "gnn",
            Strategy::Lp => "lp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StrategySet {
    Gnn,
    Lp,
    #[default]
    Both,
}

impl StrategySet {
    pub fn includes(self, s: Strategy) -> bool {
        matches!((self, s), (StrategySet::Both, _) | (StrategySet::Gnn, Strategy::Gnn) | (StrategySet::Lp, Strategy::Lp))
    }

    pub fn list(self) -> Vec<Strategy> {
        [Strategy::Gnn, Strategy::Lp].into_iter().filter(|s| self.includes(*s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    /// Currency code of the home currency.
    pub home: String,
    pub schedule: ScheduleConfig,
    pub fxrp: FxrpConfig,
    pub fxsa: FxsaConfig,
    pub strategy: StrategySet,
    pub periods_per_year: f64,
    pub rolling_days: i64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            home: "USD".into(),
            schedule: ScheduleConfig::default(),
            fxrp: FxrpConfig::default(),
            fxsa: FxsaConfig::default(),
            strategy: StrategySet::Both,
            periods_per_year: TRADING_DAYS,
            rolling_days: 365,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.fxrp.knobs.validate()?;
        self.fxsa.validate()?;
        if !(self.periods_per_year > 0.0) || self.rolling_days <= 0 {
            return Err(Error::Config("periods_per_year and rolling_days must be positive".into()));
        }
        Ok(())
    }

    pub fn home_index(&self, currencies: &[String]) -> Result<usize> {
        currencies
            .iter()
            .position(|c| *c == self.home)
            .ok_or_else(|| Error::Config(format!("home currency {} is not in the data", self.home)))
    }
}

/// First-stage output: one model per refit and the stitched predictions.
#[derive(Debug, Clone)]
pub struct PredictionStage {
    pub schedule: FitSchedule,
    pub data: FxrpData,
    pub models: Vec<FxrpModel>,
    pub store: PredictionStore,
}

/// Trains the prediction network at every refit date and stitches out-of-sample predictions.
pub fn run_prediction_stage(
    cfg: &BacktestConfig,
    market: &Market,
    history: &MarketHistory,
    seed: u64,
    exec: Exec,
) -> Result<PredictionStage> {
    cfg.validate()?;
    let schedule = build_schedule(&market.calendar, &cfg.schedule)?;
    let data = FxrpData::build(history, &cfg.fxrp.windows, exec)?;
    // Each refit only reads dates before its own t_k, so all refits train independently.
    let trained = par::map_range(exec, schedule.n_fit(), |i| {
        let k = i + 1;
        let split = make_splits(&schedule, Stage::Prediction, k)?;
        train_fxrp(k, &data, &split, &cfg.fxrp, seed, exec).map_err(|e| e.at(k, schedule.refit(k)))
    });
    let models = trained.into_iter().collect::<Result<Vec<_>>>()?;
    let refs: Vec<Option<&GnnParams>> = models.iter().map(|m| Some(&m.params)).collect();
    let store = stitch_predictions(&schedule, &refs, &data, market.n_currencies())?;
    Ok(PredictionStage {
        schedule,
        data,
        models,
        store,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyRecord {
    pub t: usize,
    pub date: NaiveDate,
    pub strategy: Strategy,
    pub k: usize,
    /// Realized data for scoring exists (quotes at `t` and `t + 1`).
    pub evaluable: bool,
    pub degenerate: bool,
    pub gain: f64,
    pub holdings_abs: f64,
    pub hhi: f64,
    pub predicted_gain: f64,
    pub n_links: usize,
    pub sum_w: f64,
    pub max_abs_h: f64,
    pub max_direct: f64,
    pub violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n_days: usize,
    pub n_traded: usize,
    pub information_ratio: Option<f64>,
    pub sortino: Option<f64>,
    pub annual_return: Option<f64>,
    pub annual_vol: Option<f64>,
    pub mdd: f64,
    pub total_gain: f64,
    /// Means over traded days.
    pub mean_holdings: Option<f64>,
    pub mean_hhi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub records: Vec<DailyRecord>,
    pub summary: Summary,
    pub rolling_ir: Vec<(NaiveDate, Option<f64>)>,
    pub rolling_holdings: Vec<(NaiveDate, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefitReport {
    pub k: usize,
    pub t_k: usize,
    pub date: NaiveDate,
    pub fxrp_val_mse: f64,
    pub fxrp_test_mse: Option<f64>,
    pub random_walk_test_mse: Option<f64>,
    pub fxrp_grid: Vec<GridResult>,
    pub fxsa_val_loss: Option<f64>,
    pub fxsa_grid: Vec<GridResult>,
    pub fxsa_train_dates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub seed: u64,
    pub home: String,
    pub refits: Vec<RefitReport>,
    pub strategies: Vec<StrategyReport>,
    /// Certificate failures of non-degenerate plans.
    pub violations: Vec<String>,
    /// Dates where the LP's predicted gain fell below the GNN plan's.
    pub lp_dominance_failures: Vec<usize>,
}

impl BacktestReport {
    pub fn strategy(&self, s: Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|r| r.strategy == s)
    }
}

#[derive(Debug, Clone)]
pub struct WalkForwardRun {
    pub report: BacktestReport,
    pub predictions: PredictionStage,
    pub fxsa_models: Vec<(usize, FxsaModel)>,
    pub book: StateBook,
}

/// `(1 + Y_i) / (1 + Y_o)` from the last rates known before `t` (1 where missing).
pub fn predicted_carry(view: &HistoryView<'_>, links: &TradableLinks) -> Result<Vec<f64>> {
    let n = links.n_currencies();
    let t = view.decision();
    let o = links.home();
    let y = |i: usize| -> Result<Option<f64>> { if t >= 2 { view.daily_ir(t - 1, i) } else { Ok(None) } };
    let mut carry = vec![1.0; n];
    if let Some(yo) = y(o)? {
        for i in links.currencies() {
            if let Some(yi) = y(i)? {
                carry[i] = (1.0 + yi) / (1.0 + yo);
            }
        }
    }
    Ok(carry)
}

/// Second-stage states for every date with predictions.
pub fn build_state_book(store: &PredictionStore, history: &MarketHistory, home: usize, exec: Exec) -> Result<StateBook> {
    let dates: Vec<usize> = store.dates().collect();
    let states = par::map_with(exec, &dates, |&t| -> Result<DayState> {
        let view = history.view(t);
        let raw = store.matrix(t).expect("date listed by the store");
        Ok(DayState::new(t, &raw, view.edges(t)?, home))
    });
    let mut book = StateBook::new(history.n_days());
    for s in states {
        book.insert(s?);
    }
    Ok(book)
}

fn fxsa_samples(book: &StateBook, history: &MarketHistory, dates: impl Iterator<Item = usize>, limit: usize) -> Vec<FxsaSample> {
    dates
        .filter(|&t| t + 1 < limit)
        .filter_map(|t| {
            let state = book.get(t)?;
            if state.links().is_empty() {
                return None;
            }
            let real = Realization::from_history(history, t, state.links())?;
            Some(FxsaSample {
                t,
                coef: real.coefficients(state.links(), &state.system.xp),
            })
        })
        .collect()
}

fn score(
    t: usize,
    k: usize,
    date: NaiveDate,
    strategy: Strategy,
    plan: &TradePlan,
    state: Option<&DayState>,
    real: Option<&Realization>,
    carry: &[f64],
) -> DailyRecord {
    let mut r = DailyRecord {
        t,
        date,
        strategy,
        k,
        evaluable: real.is_some() || plan.degenerate,
        degenerate: plan.degenerate,
        gain: 0.0,
        holdings_abs: 0.0,
        hhi: 0.0,
        predicted_gain: 0.0,
        n_links: plan.links.len(),
        sum_w: plan.cert.sum_w,
        max_abs_h: plan.cert.max_abs_h,
        max_direct: plan.cert.max_direct,
        violation: None,
    };
    if plan.degenerate {
        return r;
    }
    let state = state.expect("a traded plan has a state");
    let (links, xp) = (state.links(), &state.system.xp);
    let c1 = verify_c1(&plan.w, links, xp);
    let mut problems = c1.violations();
    if strategy == Strategy::Lp {
        // The LP does not constrain round trips; they are reported, not failed.
        problems.retain(|p| !p.starts_with("both directions"));
    }
    if !problems.is_empty() {
        r.violation = Some(problems.join("; "));
    }
    r.hhi = plan.hhi();
    r.predicted_gain = predicted_gain(&plan.w, links, xp, carry);
    if let Some(real) = real {
        let h = real.holdings(&plan.w, links, xp);
        r.gain = real.gain(&h);
        r.holdings_abs = real.holdings_abs(&h);
    }
    r
}

type Rolling = Vec<(NaiveDate, Option<f64>)>;

fn summarize(records: &[DailyRecord], cfg: &BacktestConfig) -> (Summary, Rolling, Rolling) {
    let ev: Vec<&DailyRecord> = records.iter().filter(|r| r.evaluable).collect();
    let gains: Vec<f64> = ev.iter().map(|r| r.gain).collect();
    let dates: Vec<NaiveDate> = ev.iter().map(|r| r.date).collect();
    let traded: Vec<&&DailyRecord> = ev.iter().filter(|r| !r.degenerate).collect();
    let p = cfg.periods_per_year;
    let summary = Summary {
        n_days: ev.len(),
        n_traded: traded.len(),
        information_ratio: metrics::information_ratio(&gains, p),
        sortino: metrics::sortino(&gains, p),
        annual_return: metrics::annual_return(&gains, p),
        annual_vol: metrics::annual_vol(&gains, p),
        mdd: metrics::max_drawdown(&gains),
        total_gain: gains.iter().sum(),
        mean_holdings: metrics::mean(&traded.iter().map(|r| r.holdings_abs).collect::<Vec<_>>()),
        mean_hhi: metrics::mean(&traded.iter().map(|r| r.hhi).collect::<Vec<_>>()),
    };
    let rolling_ir = metrics::rolling(&dates, &gains, cfg.rolling_days, |w| metrics::information_ratio(w, p));
    let holdings: Vec<f64> = ev.iter().map(|r| r.holdings_abs).collect();
    let rolling_holdings = metrics::rolling(&dates, &holdings, cfg.rolling_days, metrics::mean);
    (summary, rolling_ir, rolling_holdings)
}

pub fn run_walk_forward(
    cfg: &BacktestConfig,
    market: &Market,
    history: &MarketHistory,
    seed: u64,
    exec: Exec,
) -> Result<WalkForwardRun> {
    cfg.validate()?;
    let home = cfg.home_index(market.currencies())?;
    let stage = run_prediction_stage(cfg, market, history, seed, exec)?;
    let schedule = &stage.schedule;
    let book = build_state_book(&stage.store, history, home, exec)?;
    let strategies = cfg.strategy.list();
    let mut records: Vec<Vec<DailyRecord>> = vec![Vec::new(); strategies.len()];
    let mut refits = Vec::new();
    let mut fxsa_models = Vec::new();

    for k in 1..=schedule.n_fit() {
        let model = &stage.models[k - 1];
        let test = stage.data.collect(schedule.test_period(k));
        let (test_mse, rw_mse) = if test.is_empty() {
            (None, None)
        } else {
            (Some(evaluate_mse(&model.params, &test)?), Some(random_walk_mse(&test)?))
        };
        let mut refit = RefitReport {
            k,
            t_k: schedule.refit(k),
            date: market.calendar.date(schedule.refit(k)),
            fxrp_val_mse: model.val_mse,
            fxrp_test_mse: test_mse,
            random_walk_test_mse: rw_mse,
            fxrp_grid: model.table.clone(),
            fxsa_val_loss: None,
            fxsa_grid: Vec::new(),
            fxsa_train_dates: 0,
        };
        if k < schedule.n_sy {
            refits.push(refit);
            continue;
        }
        let tk = schedule.refit(k);
        let fxsa = if cfg.strategy.includes(Strategy::Gnn) {
            let split = make_splits(schedule, Stage::Trading, k)?;
            // A date's realized gain needs quotes at t + 1, which must precede t_k.
            let train = fxsa_samples(&book, history, split.train_dates(), tk);
            let val = fxsa_samples(&book, history, split.val_dates(), tk);
            refit.fxsa_train_dates = train.len();
            let m = train_fxsa(k, &book, &train, &val, &cfg.fxsa, seed, exec).map_err(|e| e.at(k, tk))?;
            refit.fxsa_val_loss = Some(m.val_loss);
            refit.fxsa_grid = m.table.clone();
            Some(m)
        } else {
            None
        };
        refits.push(refit);

        let dates: Vec<usize> = schedule.test_period(k).collect();
        let day_records = par::map_with(exec, &dates, |&t| -> Result<Vec<DailyRecord>> {
            let date = market.calendar.date(t);
            let state = book.get(t);
            let real = state.and_then(|s| Realization::from_history(history, t, s.links()));
            let view = history.view(t);
            let mut out = Vec::new();
            let carry = match state {
                Some(s) => predicted_carry(&view, s.links())?,
                None => vec![1.0; market.n_currencies()],
            };
            for &s in &strategies {
                let plan = match (s, state) {
                    (_, None) => TradePlan {
                        t,
                        links: Vec::new(),
                        w: Vec::new(),
                        u: Vec::new(),
                        positive_sum: 0.0,
                        degenerate: true,
                        reason: Some("no predictions for this date".into()),
                        cert: Default::default(),
                    },
                    (Strategy::Gnn, Some(_)) => {
                        let m = fxsa.as_ref().expect("trained when the GNN strategy is on");
                        decide_trades(t, &m.params, &book, &cfg.fxsa).map_err(|e| e.at(k, t))?
                    }
                    (Strategy::Lp, Some(st)) => arbitrage_lp(t, st.links(), &st.system.xp, &carry)
                        .map_err(|e| e.at(k, t))?
                        .plan,
                };
                let mut r = score(t, k, date, s, &plan, state, real.as_ref(), &carry);
                // Without realized quotes at t + 1 a traded day cannot be scored.
                if t + 1 > history.n_days() {
                    r.evaluable = false;
                }
                out.push(r);
            }
            Ok(out)
        });
        for day in day_records {
            for r in day? {
                let idx = strategies.iter().position(|s| *s == r.strategy).unwrap();
                records[idx].push(r);
            }
        }
        if let Some(m) = fxsa {
            fxsa_models.push((k, m));
        }
    }

    let mut violations = Vec::new();
    for recs in &records {
        for r in recs {
            if let Some(v) = &r.violation {
                violations.push(format!("{} t={} ({}): {v}", r.strategy.name(), r.t, r.date));
            }
        }
    }
    let mut lp_dominance_failures = Vec::new();
    if strategies.len() == 2 {
        for (g, l) in records[0].iter().zip(&records[1]) {
            debug_assert_eq!(g.t, l.t);
            if !g.degenerate && l.predicted_gain + 1e-9 < g.predicted_gain {
                lp_dominance_failures.push(g.t);
            }
        }
    }
    let strategies = strategies
        .iter()
        .zip(records)
        .map(|(&s, recs)| {
            let (summary, rolling_ir, rolling_holdings) = summarize(&recs, cfg);
            StrategyReport {
                strategy: s,
                records: recs,
                summary,
                rolling_ir,
                rolling_holdings,
            }
        })
        .collect();
    Ok(WalkForwardRun {
        report: BacktestReport {
            seed,
            home: cfg.home.clone(),
            refits,
            strategies,
            violations,
            lp_dominance_failures,
        },
        predictions: stage,
        fxsa_models,
        book,
    })
}
