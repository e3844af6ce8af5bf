use crate::error::{Error, Result};

/// Floor on the batch variance in the ratio branch of the loss.
pub const EPS_VAR: f64 = 1e-12;

/// Mean and unbiased variance of a batch of daily gains.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub gains: Vec<f64>,
    pub mean: f64,
    pub var: f64,
}

impl BatchStats {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        let b = gains.len();
        if b < 2 {
            return Err(Error::Precondition(format!("batch of {b} gains; need at least 2")));
        }
        let mean = gains.iter().sum::<f64>() / b as f64;
        let var = gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
        Ok(Self { gains, mean, var })
    }
}

/// `-mean^2 / max(var, eps)` when the mean gain is positive, else `-mean`.
pub fn fxsa_loss(stats: &BatchStats, eps_var: f64) -> f64 {
    if stats.mean > 0.0 {
        -stats.mean * stats.mean / stats.var.max(eps_var)
    } else {
        -stats.mean
    }
}

/// Loss and its gradient with respect to each gain.
pub fn fxsa_loss_grad(gains: &[f64], eps_var: f64) -> Result<(f64, Vec<f64>)> {
    let s = BatchStats::new(gains.to_vec())?;
    let b = gains.len() as f64;
    let loss = fxsa_loss(&s, eps_var);
    let grad = if s.mean > 0.0 {
        let v = s.var.max(eps_var);
        let floored = s.var < eps_var;
        gains
            .iter()
            .map(|g| {
                let d_mean = -2.0 * s.mean / v / b;
                let d_var = if floored {
                    0.0
                } else {
                    s.mean * s.mean / (v * v) * 2.0 * (g - s.mean) / (b - 1.0)
                };
                d_mean + d_var
            })
            .collect()
    } else {
        vec![-1.0 / b; gains.len()]
    };
    Ok((loss, grad))
}
