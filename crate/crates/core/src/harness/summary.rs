use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::Neumaier;

/// Monte Carlo report for one estimator at one design point.
///
/// `variance` uses the population divisor, so `rmse² = bias² + variance`
/// holds up to rounding; `sample_variance` carries the unbiased divisor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McSummary {
    pub estimator_id: String,
    pub n_reps: usize,
    pub mean: f64,
    pub truth: f64,
    pub bias: f64,
    pub variance: f64,
    pub sample_variance: f64,
    pub rmse: f64,
    pub mc_se: f64,
}

pub fn summarize(estimates: &[f64], truth: f64, estimator_id: &str) -> Result<McSummary> {
    let errors: Vec<f64> = estimates.iter().map(|e| e - truth).collect();
    let mut s = from_errors(&errors, estimator_id)?;
    s.truth = truth;
    s.mean = s.bias + truth;
    Ok(s)
}

/// Like [`summarize`] but with a separate truth for every replicate, as when
/// the estimand itself is random (a freshly drawn parameter per replicate).
/// Bias and variance refer to the errors `estimate - truth`.
pub fn summarize_paired(estimates: &[f64], truths: &[f64], estimator_id: &str) -> Result<McSummary> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            expected: estimates.len(),
            got: truths.len(),
        });
    }
    let errors: Vec<f64> = estimates.iter().zip(truths).map(|(e, t)| e - t).collect();
    let mut s = from_errors(&errors, estimator_id)?;
    s.mean = mean(estimates);
    s.truth = mean(truths);
    Ok(s)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<Neumaier>().value() / xs.len() as f64
}

fn from_errors(errors: &[f64], id: &str) -> Result<McSummary> {
    if errors.is_empty() {
        return Err(Error::NoReplicates);
    }
    let r = errors.len() as f64;
    let bias = mean(errors);
    let ss = errors
        .iter()
        .map(|e| (e - bias) * (e - bias))
        .collect::<Neumaier>()
        .value();
    let variance = ss / r;
    let sample_variance = if errors.len() > 1 { ss / (r - 1.0) } else { 0.0 };
    Ok(McSummary {
        estimator_id: id.to_string(),
        n_reps: errors.len(),
        mean: f64::NAN,
        truth: f64::NAN,
        bias,
        variance,
        sample_variance,
        rmse: (bias * bias + variance).sqrt(),
        mc_se: (variance / r).sqrt(),
    })
}

/// Least-squares slope of `ln(rmse)` on `ln(n)`.
pub fn rate_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "rate_slope needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, r) in points {
        if n <= 0.0 || n.is_nan() {
            return Err(Error::LogOfNonpositive(n));
        }
        if r <= 0.0 || r.is_nan() {
            return Err(Error::LogOfNonpositive(r));
        }
        xs.push(n.ln());
        ys.push(r.ln());
    }
    let mx = mean(&xs);
    let my = mean(&ys);
    let mut sxy = Neumaier::default();
    let mut sxx = Neumaier::default();
    for (x, y) in xs.iter().zip(&ys) {
        sxy.add((x - mx) * (y - my));
        sxx.add((x - mx) * (x - mx));
    }
    if sxx.value() == 0.0 {
        return Err(Error::InvalidArgument("rate_slope needs distinct n values".into()));
    }
    Ok(sxy.value() / sxx.value())
}
