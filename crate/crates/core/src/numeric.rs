// SPDX-License-Identifier: Apache-2.0

//! Log-space accumulation and a small adaptive quadrature.

use serde::Serialize;

/// `log(e^a + e^b)` without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log(e^a - e^b)` for `a >= b`. Returns `-inf` when the two are equal.
#[inline]
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b, "log_sub_exp requires a >= b ({a} < {b})");
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// Log-sum-exp over a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps a running maximum and a linear sum scaled by it, so a long stream of
/// terms spanning many orders of magnitude is summed in one pass.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub const fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term <= self.max {
            self.scaled += (log_term - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// A positive quantity carried in log-space together with its linear value.
/// `linear` is `inf` when the value overflows a double; `log` is always finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogValue {
    pub log: f64,
    pub linear: f64,
}

impl LogValue {
    pub fn from_log(log: f64) -> Self {
        Self {
            log,
            linear: log.exp(),
        }
    }
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_matches_direct_sum() {
        let terms = [-3.0, 0.5, 2.0, -700.0, 1.0];
        let mut acc = LogSum::new();
        for &t in &terms {
            acc.push(t);
        }
        let direct: f64 = terms.iter().map(|t| t.exp()).sum::<f64>().ln();
        assert!((acc.value() - direct).abs() < 1e-14);
        assert!((log_sum_exp(&terms) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_survives_overflow_range() {
        let mut acc = LogSum::new();
        acc.push(1000.0);
        acc.push(1000.0);
        assert!((acc.value() - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(LogSum::new().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn add_and_sub_are_inverse() {
        let s = log_add_exp(2.0, -1.0);
        assert!((log_sub_exp(s, -1.0) - 2.0).abs() < 1e-14);
        assert_eq!(log_sub_exp(3.0, 3.0), f64::NEG_INFINITY);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
    }

    #[test]
    fn simpson_on_polynomial_and_gaussian() {
        let v = integrate(|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let g = integrate(|x| (-x * x).exp(), -8.0, 8.0, 1e-13);
        assert!((g - std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }
}
