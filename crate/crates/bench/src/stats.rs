//! Medians, speedups and the pooled-variance two-sample t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("need at least two observations per sample, got {0} and {1}")]
    TooFewObservations(usize, usize),
    #[error("both samples are constant but differ; the t statistic is infinite")]
    DegenerateVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: usize,
    pub reject_null: bool,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Median, averaging the middle pair for even lengths.
pub fn median(x: &[f64]) -> Result<f64, StatsError> {
    if x.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// `median(reference) / median(candidate)`: above 1 means the candidate is
/// faster.
pub fn median_speedup(reference: &[f64], candidate: &[f64]) -> Result<f64, StatsError> {
    Ok(median(reference)? / median(candidate)?)
}

/// Two-sided p-value of Student's t with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    beta_reg(0.5 * df, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Student's two-sample t-test assuming equal variances, two-sided.
///
/// Two constant, equal samples give `t = 0, p = 1`. Two constant samples
/// with different values have no finite statistic and are an error.
pub fn two_sample_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTestResult, StatsError> {
    let (na, nb) = (a.len(), b.len());
    if na < 2 || nb < 2 {
        return Err(StatsError::TooFewObservations(na, nb));
    }
    let (ma, mb) = (mean(a), mean(b));
    let ss = |x: &[f64], m: f64| x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let df = na + nb - 2;
    let pooled = (ss(a, ma) + ss(b, mb)) / df as f64;
    if pooled == 0.0 {
        if ma == mb {
            return Ok(TTestResult { t_statistic: 0.0, p_value: 1.0, df, reject_null: false });
        }
        return Err(StatsError::DegenerateVariance);
    }
    let t = (ma - mb) / (pooled * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
    let p = t_two_sided_p(t, df as f64);
    Ok(TTestResult { t_statistic: t, p_value: p, df, reject_null: p < alpha })
}
