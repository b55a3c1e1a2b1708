// SPDX-License-Identifier: Apache-2.0

//! Goodness-of-fit and time-series diagnostics that turn simulation output
//! into gated [`TestReport`]s.

mod autocorr;
mod dispersion;
mod gaussian;
mod ks;
mod report;

pub use autocorr::{autocorr, grid_step, pooled_autocorr, pooled_moments, MIN_GRID_POINTS};
pub use dispersion::{dispersion_index, index_of_counts, window_counts, DISPERSION_GATE, MIN_WINDOWS};
pub use gaussian::{discretized_normal, gaussian_fit_samples, gaussian_fit_weights};
pub use ks::{
    kolmogorov_survival, ks_p_value, ks_statistic, ks_test, ks_two_sample, normal_cdf, RefCdf,
    KS_GATE, MIN_KS_SAMPLES,
};
pub use report::{summary_table, Gate, TestReport, Verdict};

/// Sample mean and unbiased standard error.
pub fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median of a sample (mean of the two middle values for even length).
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
