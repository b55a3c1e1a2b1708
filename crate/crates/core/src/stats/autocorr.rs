// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

pub const MIN_GRID_POINTS: usize = 1000;
const GRID_TOL: f64 = 1e-6;

/// Grid step of a `(time, value)` sequence, or an error if it is not uniform.
pub fn grid_step(path: &[(f64, f64)]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: path.len() });
    }
    let step = (path[path.len() - 1].0 - path[0].0) / (path.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::Domain("grid times must increase".into()));
    }
    for (i, w) in path.windows(2).enumerate() {
        if ((w[1].0 - w[0].0) - step).abs() > GRID_TOL * step {
            return Err(Error::Domain(format!("non-uniform grid at index {i}")));
        }
    }
    Ok(step)
}

fn lag_steps(step: f64, lag: f64) -> Result<usize> {
    if lag < 0.0 {
        return Err(Error::Domain(format!("lag must be >= 0, got {lag}")));
    }
    let k = (lag / step).round();
    if (k * step - lag).abs() > GRID_TOL * step.max(lag) {
        return Err(Error::Domain(format!("lag {lag} is not a multiple of the grid step {step}")));
    }
    Ok(k as usize)
}

/// Biased lag-`lag` autocorrelation of a uniformly gridded stationary segment.
pub fn autocorr(path: &[(f64, f64)], lag: f64) -> Result<f64> {
    pooled_autocorr(&[path], lag)
}

/// Lag autocorrelation over several independent segments on grids of equal
/// step, with mean and variance pooled across segments and lagged products
/// taken within each segment.
pub fn pooled_autocorr(segments: &[&[(f64, f64)]], lag: f64) -> Result<f64> {
    let total: usize = segments.iter().map(|s| s.len()).sum();
    if total < MIN_GRID_POINTS {
        return Err(Error::TooFewSamples {
            needed: MIN_GRID_POINTS,
            got: total,
        });
    }
    let mut step = None::<f64>;
    for seg in segments.iter().filter(|s| s.len() >= 2) {
        let h = grid_step(seg)?;
        match step {
            None => step = Some(h),
            Some(s0) if (h - s0).abs() > GRID_TOL * s0 => {
                return Err(Error::Domain("segments use different grid steps".into()))
            }
            _ => {}
        }
    }
    let step = step.ok_or_else(|| Error::Domain("no segment has two grid points".into()))?;
    let k = lag_steps(step, lag)?;
    let (mean, var) = pooled_moments(segments.iter().copied());
    if var == 0.0 {
        return Err(Error::Degenerate("constant sequence".into()));
    }
    let mut acc = 0.0;
    for seg in segments {
        if seg.len() > k {
            acc += seg
                .iter()
                .zip(&seg[k..])
                .map(|(x, y)| (x.1 - mean) * (y.1 - mean))
                .sum::<f64>();
        }
    }
    Ok(acc / (total as f64 * var))
}

/// Pooled mean and population variance of the values of several segments.
pub fn pooled_moments<'a>(segments: impl Iterator<Item = &'a [(f64, f64)]> + Clone) -> (f64, f64) {
    let mut n = 0usize;
    let mut sum = 0.0;
    for seg in segments.clone() {
        n += seg.len();
        sum += seg.iter().map(|p| p.1).sum::<f64>();
    }
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sum / n as f64;
    let ss: f64 = segments
        .flat_map(|seg| seg.iter())
        .map(|p| (p.1 - mean).powi(2))
        .sum();
    (mean, ss / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::RngSpec;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn grid(values: Vec<f64>, step: f64) -> Vec<(f64, f64)> {
        values.into_iter().enumerate().map(|(i, v)| (i as f64 * step, v)).collect()
    }

    #[test]
    fn lag_zero_is_one() {
        let mut rng = RngSpec::new(1, 0).rng();
        let p = grid((0..2000).map(|_| rng.random()).collect(), 0.1);
        assert!((autocorr(&p, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn white_noise_is_uncorrelated() {
        let mut rng = RngSpec::new(2, 0).rng();
        let p = grid((0..100_000).map(|_| rng.sample(StandardNormal)).collect(), 1.0);
        assert!(autocorr(&p, 1.0).unwrap().abs() < 0.02);
    }

    #[test]
    fn exact_ar1_matches_exponential_decay() {
        let delta = 0.1;
        let phi = (-delta as f64).exp();
        let mut rng = RngSpec::new(3, 0).rng();
        let mut x = 0.0f64;
        let noise = (0.5 * (1.0 - phi * phi)).sqrt();
        let values: Vec<f64> = (0..100_000)
            .map(|_| {
                x = phi * x + noise * rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect();
        let p = grid(values, delta);
        assert!((autocorr(&p, delta).unwrap() - phi).abs() < 0.03);
        assert!((autocorr(&p, 1.0).unwrap() - (-1f64).exp()).abs() < 0.03);
    }

    #[test]
    fn rejects_irregular_grids_and_short_segments() {
        let mut p = grid((0..2000).map(|i| (i % 7) as f64).collect(), 0.1);
        p[500].0 += 0.03;
        assert!(autocorr(&p, 0.1).is_err());
        let short = grid((0..999).map(|i| i as f64).collect(), 0.1);
        assert!(autocorr(&short, 0.1).is_err());
        let ok = grid((0..2000).map(|i| (i % 7) as f64).collect(), 0.1);
        assert!(autocorr(&ok, 0.15).is_err());
    }

    #[test]
    fn pooled_equals_single_for_one_segment() {
        let mut rng = RngSpec::new(4, 0).rng();
        let p = grid((0..3000).map(|_| rng.random()).collect(), 0.5);
        let a = autocorr(&p, 1.0).unwrap();
        let b = pooled_autocorr(&[&p[..1500], &p[1500..]], 1.0).unwrap();
        // Splitting drops only the lagged products across the cut.
        assert!((a - b).abs() < 2e-3);
    }
}
