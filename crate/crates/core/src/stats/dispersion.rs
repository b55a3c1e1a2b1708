// SPDX-License-Identifier: Apache-2.0

use super::report::{Gate, TestReport};
use crate::error::{Error, Result};

pub const MIN_WINDOWS: usize = 10;
pub const DISPERSION_GATE: Gate = Gate::Within { lo: 0.7, hi: 1.3 };

/// Event counts in consecutive windows `[k w, (k+1) w)` covering `[0, span)`.
/// A trailing partial window is dropped.
pub fn window_counts(event_times: &[f64], window: f64, span: f64) -> Result<Vec<u64>> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Domain(format!("window must be positive, got {window}")));
    }
    let n_windows = (span / window).floor() as usize;
    let mut counts = vec![0u64; n_windows];
    for &t in event_times {
        if t >= 0.0 {
            let k = (t / window).floor() as usize;
            if k < n_windows {
                counts[k] += 1;
            }
        }
    }
    Ok(counts)
}

/// Variance-to-mean ratio of a count vector (population variance).
pub fn index_of_counts(counts: &[u64]) -> Result<TestReport> {
    if counts.len() < MIN_WINDOWS {
        return Err(Error::TooFewSamples {
            needed: MIN_WINDOWS,
            got: counts.len(),
        });
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    if mean == 0.0 {
        return Err(Error::Degenerate("no events in any window".into()));
    }
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    Ok(TestReport::new("dispersion-index", var / mean, "1 (Poisson)", DISPERSION_GATE)
        .with_samples(counts.len(), 0)
        .with_detail("mean_count", mean)
        .with_detail("var_count", var))
}

/// Dispersion index of events over `[0, span)` cut into windows of length
/// `window`.
pub fn dispersion_index(event_times: &[f64], window: f64, span: f64) -> Result<TestReport> {
    index_of_counts(&window_counts(event_times, window, span)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::RngSpec;
    use rand::Rng;
    use rand_distr::Exp1;

    #[test]
    fn equally_spaced_events_have_zero_index() {
        let t: Vec<f64> = (0..1000).map(|k| k as f64 + 0.5).collect();
        let r = dispersion_index(&t, 10.0, 1000.0).unwrap();
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn poisson_events_have_unit_index() {
        let mut rng = RngSpec::new(12, 0).rng();
        let mut t = 0.0;
        let mut events = Vec::new();
        while t < 10_000.0 {
            t += rng.sample::<f64, _>(Exp1);
            events.push(t);
        }
        let r = dispersion_index(&events, 1.0, 10_000.0).unwrap();
        assert!((0.95..=1.05).contains(&r.statistic), "{}", r.statistic);
    }

    #[test]
    fn single_burst() {
        let events = vec![0.5; 40];
        let r = dispersion_index(&events, 1.0, 10.0).unwrap();
        // counts (40, 0, ..., 0): mean 4, population variance 144.
        assert!((r.statistic - 36.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_windows() {
        assert!(dispersion_index(&[0.1, 0.2], 1.0, 9.5).is_err());
    }
}
