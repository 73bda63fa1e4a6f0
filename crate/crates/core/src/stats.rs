//! Summary statistics for measurement series.

use serde::{Deserialize, Serialize};

use crate::error::StatError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation, 0 for a single sample.
    pub sample_std: f64,
    /// Half width of the 95% confidence interval (normal approximation).
    pub ci95_margin: f64,
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStats, StatError> {
    if samples.is_empty() {
        return Err(StatError::Empty);
    }
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(StatError::NonFinite(x.to_string()));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sample_std = if n < 2 {
        0.0
    } else {
        (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(SummaryStats { n, mean, sample_std, ci95_margin: 1.96 * sample_std / (n as f64).sqrt() })
}
