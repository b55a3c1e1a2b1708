// SPDX-License-Identifier: Apache-2.0

//! One- and two-sample Kolmogorov-Smirnov tests.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use super::report::{Gate, TestReport};
use crate::error::{Error, Result};

pub const MIN_KS_SAMPLES: usize = 20;
pub const KS_GATE: Gate = Gate::PValueAbove { alpha: 0.01 };

/// Reference distribution of a one-sample test.
pub enum RefCdf<'a> {
    UnitExponential,
    StandardNormal,
    Exponential { mean: f64 },
    Normal { mean: f64, sd: f64 },
    Custom { name: &'a str, cdf: &'a dyn Fn(f64) -> f64 },
}

impl RefCdf<'_> {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            RefCdf::UnitExponential => exp_cdf(x, 1.0),
            RefCdf::StandardNormal => normal_cdf(x),
            RefCdf::Exponential { mean } => exp_cdf(x, *mean),
            RefCdf::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            RefCdf::Custom { cdf, .. } => cdf(x),
        }
    }

    pub fn name(&self) -> String {
        match self {
            RefCdf::UnitExponential => "Exp(1)".into(),
            RefCdf::StandardNormal => "N(0,1)".into(),
            RefCdf::Exponential { mean } => format!("Exp(mean={mean})"),
            RefCdf::Normal { mean, sd } => format!("N({mean},{sd}^2)"),
            RefCdf::Custom { name, .. } => (*name).to_string(),
        }
    }
}

fn exp_cdf(x: f64, mean: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x / mean).exp_m1()
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Survival function `P(K > lambda)` of the Kolmogorov distribution.
///
/// Both representations are summed until a term drops below 1e-10: the
/// alternating series for large `lambda`, the theta-transformed one for
/// small `lambda` where the former converges slowly.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    const TERM_TOL: f64 = 1e-10;
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        let mut cdf = 0.0;
        let coef = (2.0 * PI).sqrt() / lambda;
        for k in 1.. {
            let odd = (2 * k - 1) as f64;
            let term = coef * (-odd * odd * PI * PI / (8.0 * lambda * lambda)).exp();
            cdf += term;
            if term < TERM_TOL {
                break;
            }
        }
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut q = 0.0;
        let mut sign = 1.0;
        for j in 1.. {
            let jf = j as f64;
            let term = 2.0 * (-2.0 * jf * jf * lambda * lambda).exp();
            q += sign * term;
            if term < TERM_TOL {
                break;
            }
            sign = -sign;
        }
        q.clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value of statistic `d` at effective sample size `n`, with
/// Stephens' finite-sample scaling of the argument.
pub fn ks_p_value(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// Exact one-sample statistic `sup |F_n - F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_KS_SAMPLES {
        Err(Error::TooFewSamples {
            needed: MIN_KS_SAMPLES,
            got: n,
        })
    } else {
        Ok(())
    }
}

/// One-sample KS test. The report's statistic is `D_n`, gated on `p > 0.01`.
pub fn ks_test(samples: &[f64], reference: &RefCdf<'_>) -> Result<TestReport> {
    check_size(samples.len())?;
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("KS samples contain NaN".into()));
    }
    let d = ks_statistic(samples, |x| reference.cdf(x));
    let p = ks_p_value(d, samples.len() as f64);
    Ok(TestReport::new("ks", d, reference.name(), KS_GATE)
        .with_p_value(p)
        .with_samples(samples.len(), 0))
}

/// Two-sample KS test on `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestReport> {
    check_size(a.len())?;
    check_size(b.len())?;
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    let p = ks_p_value(d, n_eff);
    Ok(TestReport::new("ks-two-sample", d, "second sample", KS_GATE)
        .with_p_value(p)
        .with_samples(xs.len() + ys.len(), 0)
        .with_detail("n_a", na)
        .with_detail("n_b", nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::RngSpec;
    use rand::Rng;
    use rand_distr::{Exp1, StandardNormal};

    fn exp_samples(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = RngSpec::new(seed, 0).rng();
        (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect()
    }

    #[test]
    fn null_samples_pass() {
        let r = ks_test(&exp_samples(1, 10_000), &RefCdf::UnitExponential).unwrap();
        assert!(r.p_value.unwrap() > 0.001, "{}", r.line());
        let mut rng = RngSpec::new(2, 0).rng();
        let z: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(ks_test(&z, &RefCdf::StandardNormal).unwrap().p_value.unwrap() > 0.001);
    }

    #[test]
    fn scaled_samples_fail_with_expected_statistic() {
        let x: Vec<f64> = exp_samples(3, 10_000).iter().map(|v| 2.0 * v).collect();
        let r = ks_test(&x, &RefCdf::UnitExponential).unwrap();
        // sup_x (e^{-x/2} - e^{-x}) = 1/4 at x = 2 ln 2.
        assert!((r.statistic - 0.25).abs() < 0.02, "{}", r.statistic);
        assert!(r.p_value.unwrap() < 1e-6);
        assert!(!r.passed());
    }

    #[test]
    fn all_equal_samples() {
        let x = vec![0.7; 30];
        let f = exp_cdf(0.7, 1.0);
        let r = ks_test(&x, &RefCdf::UnitExponential).unwrap();
        assert!((r.statistic - f.max(1.0 - f)).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        assert!(ks_test(&[1.0; 19], &RefCdf::UnitExponential).is_err());
        assert!(ks_two_sample(&[1.0; 30], &[1.0; 5]).is_err());
    }

    #[test]
    fn p_value_monotone_in_d() {
        let mut last = 1.0;
        for k in 0..200 {
            let p = ks_p_value(k as f64 * 0.002, 400.0);
            assert!(p <= last + 1e-15);
            last = p;
        }
        assert!((ks_p_value(0.0, 100.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_branches_agree() {
        // Both representations are valid everywhere; compare at the switch.
        let lam: f64 = 1.0;
        let alt: f64 = (1..50)
            .map(|j| {
                let jf = j as f64;
                2.0 * (-1f64).powi(j - 1) * (-2.0 * jf * jf * lam * lam).exp()
            })
            .sum();
        assert!((kolmogorov_survival(1.0 - 1e-12) - alt).abs() < 1e-9);
        // Classical critical value: P(K > 1.628) = 0.01.
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
    }

    #[test]
    fn custom_reference() {
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        let r = RefCdf::Custom { name: "U(0,1)", cdf: &cdf };
        let mut rng = RngSpec::new(5, 0).rng();
        let u: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        assert!(ks_test(&u, &r).unwrap().passed());
    }

    fn rejection_rate(reject: impl Fn(u64) -> bool) -> f64 {
        (0..200).filter(|&i| reject(i)).count() as f64 / 200.0
    }

    #[test]
    fn null_calibration_one_sample() {
        let rate = rejection_rate(|i| {
            let x = exp_samples(1000 + i, 200);
            ks_test(&x, &RefCdf::UnitExponential).unwrap().p_value.unwrap() <= 0.01
        });
        assert!(rate <= 0.03, "rejection rate {rate}");
    }

    #[test]
    fn null_calibration_two_sample() {
        let rate = rejection_rate(|i| {
            let a = exp_samples(2000 + i, 150);
            let b = exp_samples(3000 + i, 250);
            ks_two_sample(&a, &b).unwrap().p_value.unwrap() <= 0.01
        });
        assert!(rate <= 0.03, "rejection rate {rate}");
    }

    #[test]
    fn two_sample_detects_shift() {
        let a = exp_samples(7, 500);
        let b: Vec<f64> = exp_samples(8, 500).iter().map(|v| v * 1.5).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value.unwrap() < 1e-4);
    }
}
