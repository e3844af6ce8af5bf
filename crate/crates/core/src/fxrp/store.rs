//! Out-of-sample predictions for every date, tagged with the refit that made them.

use std::fmt::Write as _;

use super::data::FxrpData;
use super::schedule::{k_star, make_splits, FitSchedule, Stage};
use super::train::{predict, to_rate_matrix};
use crate::error::{Error, Result};
use crate::fx_graph::RateMatrix;
use crate::neural::GnnParams;

#[derive(Debug, Clone, PartialEq)]
pub struct DayPredictions {
    pub t: usize,
    /// Refit whose parameters produced these predictions.
    pub provenance: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionStore {
    n_currencies: usize,
    days: Vec<Option<DayPredictions>>,
}

impl PredictionStore {
    pub fn new(n_currencies: usize, n_days: usize) -> Self {
        Self {
            n_currencies,
            days: vec![None; n_days + 2],
        }
    }

    pub fn insert(&mut self, day: DayPredictions) -> Result<()> {
        if let Some(&(i, j, x)) = day.entries.iter().find(|(_, _, x)| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::Precondition(format!("prediction {x} for ({i},{j}) at t={} is not positive", day.t)));
        }
        let t = day.t;
        if t >= self.days.len() {
            self.days.resize(t + 1, None);
        }
        self.days[t] = Some(day);
        Ok(())
    }

    pub fn get(&self, t: usize) -> Option<&DayPredictions> {
        self.days.get(t).and_then(|d| d.as_ref())
    }

    pub fn matrix(&self, t: usize) -> Option<RateMatrix> {
        self.get(t).map(|d| to_rate_matrix(self.n_currencies, &d.entries))
    }

    pub fn dates(&self) -> impl Iterator<Item = usize> + '_ {
        self.days.iter().enumerate().filter(|(_, d)| d.is_some()).map(|(t, _)| t)
    }

    pub fn len(&self) -> usize {
        self.days.iter().filter(|d| d.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `t,i,j,xhat,provenance_k` lines.
    pub fn to_records(&self, names: &[String]) -> String {
        let mut s = String::from("t,i,j,xhat,provenance_k\n");
        for d in self.days.iter().flatten() {
            for &(i, j, x) in &d.entries {
                let _ = writeln!(s, "{},{},{},{:?},{}", d.t, names[i], names[j], x, d.provenance);
            }
        }
        s
    }
}

/// Predictions over the pre-test era from refit `k*(t)` and over each test
/// period from its own refit. `models[k - 1]` holds refit `k`; missing models
/// (not yet trained) leave their dates empty.
pub fn stitch_predictions(
    schedule: &FitSchedule,
    models: &[Option<&GnnParams>],
    data: &FxrpData,
    n_currencies: usize,
) -> Result<PredictionStore> {
    let mut store = PredictionStore::new(n_currencies, schedule.end);
    for t in schedule.t0..=schedule.end {
        let k = if t < schedule.t1() {
            k_star(schedule, t).ok_or_else(|| {
                Error::Schedule(format!("t={t} lies in no covering validation block"))
            })?
        } else {
            schedule.test_refit(t).expect("inside the test era")
        };
        let Some(params) = models.get(k - 1).copied().flatten() else {
            continue;
        };
        let Some(sample) = data.get(t) else { continue };
        if t < schedule.t1() {
            let split = make_splits(schedule, Stage::Prediction, k)?;
            assert!(!split.is_train(t), "t={t} is a training date of refit {k}");
        }
        store.insert(DayPredictions {
            t,
            provenance: k,
            entries: predict(params, sample).map_err(|e| e.at(k, t))?,
        })?;
    }
    Ok(store)
}
