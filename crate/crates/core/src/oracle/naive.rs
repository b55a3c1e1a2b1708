// SPDX-License-Identifier: Apache-2.0

//! Naive first-step recursions in double-double arithmetic.
//!
//! Quadratic-time, no log-space tricks, no linear solve: the third corner of
//! the exactness triangle next to the closed-form sums and the tridiagonal
//! eliminations. Only intended for `N` up to a few thousand.

use std::ops::{Add, Div, Mul};

use crate::model::ModelParams;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let p = self.hi * rhs.hi;
        let e = self.hi.mul_add(rhs.hi, -p);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self + Self::new(-q1) * rhs;
        let q2 = r.hi / rhs.hi;
        let r = r + Self::new(-q2) * rhs;
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::new(q3)
    }
}

fn lambda(p: &ModelParams, k: usize) -> DoubleDouble {
    // lambda_k = k (N - k) (1/2 + s) / N, formed from exact integer parts.
    let big_n = DoubleDouble::new(p.n as f64);
    let kk = DoubleDouble::new(k as f64);
    let rest = DoubleDouble::new((p.n - k) as f64);
    kk * rest * (DoubleDouble::new(0.5) + DoubleDouble::new(p.s)) / big_n
}

fn mu(p: &ModelParams, k: usize) -> DoubleDouble {
    // mu_k = k ((N - k) / (2N) + m)
    let big_n = DoubleDouble::new(p.n as f64);
    let kk = DoubleDouble::new(k as f64);
    let rest = DoubleDouble::new((p.n - k) as f64);
    kk * (rest / (DoubleDouble::new(2.0) * big_n) + DoubleDouble::new(p.m))
}

/// Expected time to step `k -> k-1` of the absorbed chain:
/// `sum_{j>=k} (1/mu_j) prod_{i=k}^{j-1} lambda_i / mu_i`.
fn step_down(p: &ModelParams, lam: &[DoubleDouble], mu: &[DoubleDouble], k: usize) -> DoubleDouble {
    let mut sum = DoubleDouble::ZERO;
    let mut prod = DoubleDouble::ONE;
    for j in k..=p.n {
        sum = sum + prod / mu[j];
        prod = prod * lam[j] / mu[j];
    }
    sum
}

fn rate_tables(p: &ModelParams) -> (Vec<DoubleDouble>, Vec<DoubleDouble>) {
    let lam = (0..=p.n).map(|k| lambda(p, k)).collect();
    let mu = (0..=p.n).map(|k| mu(p, k)).collect();
    (lam, mu)
}

/// `E_n[T_0]` of the fittest-class chain.
pub fn absorption_time(p: &ModelParams, start: usize) -> f64 {
    let (lam, mu) = rate_tables(p);
    let mut total = DoubleDouble::ZERO;
    for k in 1..=start {
        total = total + step_down(p, &lam, &mu, k);
    }
    total.to_f64()
}

/// `E_N[T_a]` with `a = floor(N (1 - rho))`.
pub fn top_to_center(p: &ModelParams) -> f64 {
    let (lam, mu) = rate_tables(p);
    let a = p.derived().a_floor;
    let mut total = DoubleDouble::ZERO;
    for k in (a + 1)..=p.n {
        total = total + step_down(p, &lam, &mu, k);
    }
    total.to_f64()
}

/// `E_0[T_a]` of the softly reflected chain, summing upward steps
/// `t_k = sum_{j<=k} (1/lambda*_j) prod_{i=j+1}^{k} mu_i / lambda_i`.
pub fn reach_time_soft(p: &ModelParams) -> f64 {
    let (mut lam, mu) = rate_tables(p);
    lam[0] = DoubleDouble::ONE;
    let a = p.derived().a_floor;
    let mut total = DoubleDouble::ZERO;
    for k in 0..a {
        let mut prod = DoubleDouble::ONE;
        let mut step = DoubleDouble::ZERO;
        for j in (0..=k).rev() {
            step = step + prod / lam[j];
            prod = prod * mu[j] / lam[j];
        }
        total = total + step;
    }
    total.to_f64()
}

/// `P_start(T_0 < T_upper)` from raw odds-ratio products.
pub fn exit_prob(p: &ModelParams, start: usize, upper: usize) -> f64 {
    let (lam, mu) = rate_tables(p);
    let mut r = DoubleDouble::ONE;
    let mut below = DoubleDouble::ZERO;
    let mut above = DoubleDouble::ZERO;
    for i in 0..upper {
        if i > 0 {
            r = r * mu[i] / lam[i];
        }
        if i < start {
            below = below + r;
        } else {
            above = above + r;
        }
    }
    (above / (below + above)).to_f64()
}
