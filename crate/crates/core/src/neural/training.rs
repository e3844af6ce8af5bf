use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hyperparameter setting: parameter budget and number of conv layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub budget: usize,
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GridPoint>", into = "Vec<GridPoint>")]
pub struct HyperGrid(Vec<GridPoint>);

impl HyperGrid {
    pub fn new(points: Vec<GridPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("hyperparameter grid is empty".into()));
        }
        Ok(Self(points))
    }

    /// `{1e4, 5e4, 1e5} x {2, 3, 4}`.
    pub fn full() -> Self {
        let mut v = Vec::new();
        for budget in [10_000, 50_000, 100_000] {
            for layers in [2, 3, 4] {
                v.push(GridPoint { budget, layers });
            }
        }
        Self(v)
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<GridPoint>> for HyperGrid {
    type Error = Error;
    fn try_from(v: Vec<GridPoint>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<HyperGrid> for Vec<GridPoint> {
    fn from(g: HyperGrid) -> Self {
        g.0
    }
}

/// Optimizer and early-stopping settings shared by both stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainKnobs {
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    /// Caps the mini-batches drawn per epoch; `None` visits every sample.
    pub max_steps_per_epoch: Option<usize>,
}

impl Default for TrainKnobs {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            max_epochs: 500,
            patience: 20,
            batch_size: 64,
            max_steps_per_epoch: None,
        }
    }
}

impl TrainKnobs {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch size and epoch count must be positive".into()));
        }
        if self.max_steps_per_epoch == Some(0) {
            return Err(Error::Config("max_steps_per_epoch must be positive".into()));
        }
        Ok(())
    }
}

/// Validation score of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub point: GridPoint,
    pub hidden: usize,
    pub val_score: f64,
    pub epochs: usize,
}

/// Index of the lowest validation score; ties go to the smaller budget, then fewer layers.
pub fn select_best(results: &[GridResult]) -> Option<usize> {
    (0..results.len()).min_by(|&a, &b| {
        let (x, y) = (&results[a], &results[b]);
        x.val_score
            .total_cmp(&y.val_score)
            .then(x.point.budget.cmp(&y.point.budget))
            .then(x.point.layers.cmp(&y.point.layers))
    })
}
