// SPDX-License-Identifier: Apache-2.0

use super::ks::normal_cdf;
use super::report::{Gate, TestReport};
use crate::error::{Error, Result};

/// Mass of `N(mean, var)` on the integer cell `[k - 1/2, k + 1/2)`.
pub fn discretized_normal(k: i64, mean: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let hi = (k as f64 + 0.5 - mean) / sd;
    let lo = (k as f64 - 0.5 - mean) / sd;
    // Difference of tails on the far side of the mean to keep accuracy.
    if lo > 0.0 {
        normal_cdf(-lo) - normal_cdf(-hi)
    } else {
        normal_cdf(hi) - normal_cdf(lo)
    }
}

/// Compare a weighted histogram on integer states `offset, offset+1, ...`
/// with the discretized `N(mean, var)`.
///
/// The statistic is the total-variation distance; normal mass falling
/// outside the support counts in full. Weights are normalised first.
pub fn gaussian_fit_weights(weights: &[f64], offset: i64, mean: f64, var: f64) -> Result<TestReport> {
    if weights.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if !(var > 0.0) {
        return Err(Error::Domain(format!("variance must be positive, got {var}")));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("histogram has no mass".into()));
    }
    let mut abs_diff = 0.0;
    let mut inside = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let k = offset + i as i64;
        let q = discretized_normal(k, mean, var);
        let w = w / total;
        abs_diff += (w - q).abs();
        inside += q;
        m1 += w * k as f64;
        m2 += w * (k as f64) * (k as f64);
    }
    let outside = (1.0 - inside).max(0.0);
    let tv = 0.5 * (abs_diff + outside);
    let fit_var = m2 - m1 * m1;
    Ok(TestReport::new(
        "gaussian-tv",
        tv,
        format!("N({mean:.6}, {var:.6})"),
        Gate::ReportOnly,
    )
    .with_samples(weights.len(), 0)
    .with_detail("mean", m1)
    .with_detail("var", fit_var)
    .with_detail("mean_deviation", m1 - mean)
    .with_detail("var_ratio", fit_var / var))
}

/// Same comparison for raw samples, binned at the nearest integer.
pub fn gaussian_fit_samples(samples: &[f64], mean: f64, var: f64) -> Result<TestReport> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let bins: Vec<i64> = samples.iter().map(|x| x.round() as i64).collect();
    let lo = *bins.iter().min().expect("nonempty");
    let hi = *bins.iter().max().expect("nonempty");
    let mut weights = vec![0.0; (hi - lo + 1) as usize];
    for b in bins {
        weights[(b - lo) as usize] += 1.0;
    }
    Ok(gaussian_fit_weights(&weights, lo, mean, var)?.with_samples(samples.len(), 0))
}
