// SPDX-License-Identifier: Apache-2.0

//! Exact log-space analytics of the fittest-class chain.
//!
//! With odds-ratio products `r_l = prod_{i<=l} mu_i / lambda_i`, the
//! potential is `U(n) = log r_n` and the harmonic function of the embedded
//! jump chain is `R_k = sum_{i<k} r_i`. Hitting probabilities, mean hitting
//! times and the equilibrium of the softly reflected chain are all finite
//! sums of these, evaluated here verbatim in log-space.

mod dawson;
mod h;

use std::io::{self, Write};

pub use dawson::dawson;
pub use h::{e_n, eta, excursion_bound, h_family, hit_prob_asymptotic, v_n};

use crate::error::{Error, Result};
use crate::model::{DerivedParams, ModelParams};
use crate::numeric::LogSum;

/// Potential `U(n)` on `0..N` and `log R_k` on `0..=N`.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    pub params: ModelParams,
    pub derived: DerivedParams,
    /// `U(n)` for `n = 0..N-1`; `r_N` is infinite and never needed.
    u: Vec<f64>,
    /// `log R_k` for `k = 0..=N`, with `log R_0 = -inf`.
    log_r_cum: Vec<f64>,
}

/// Build the potential table in one `O(N)` pass.
pub fn build_potential(p: &ModelParams) -> Result<PotentialTable> {
    let derived = crate::model::derive_params(p)?;
    let n = p.n;
    let mut u = Vec::with_capacity(n);
    let mut log_r_cum = Vec::with_capacity(n + 1);
    u.push(0.0);
    log_r_cum.push(f64::NEG_INFINITY);
    let mut acc = LogSum::new();
    acc.push(0.0);
    log_r_cum.push(acc.value());
    let mut current = 0.0;
    for l in 1..n {
        current += (p.mu(l) / p.lambda(l)).ln();
        u.push(current);
        acc.push(current);
        log_r_cum.push(acc.value());
    }
    Ok(PotentialTable {
        params: *p,
        derived,
        u,
        log_r_cum,
    })
}

impl PotentialTable {
    pub fn len(&self) -> usize {
        self.params.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `U(n)` for `n < N`.
    #[inline]
    pub fn potential(&self, n: usize) -> f64 {
        self.u[n]
    }

    pub fn potentials(&self) -> &[f64] {
        &self.u
    }

    /// `log R_k` for `k <= N`.
    #[inline]
    pub fn log_r_cum(&self, k: usize) -> f64 {
        self.log_r_cum[k]
    }

    /// `log sum_{i=lo}^{hi-1} r_i`, summed directly so that no cancellation
    /// between two large `R` values occurs.
    pub fn log_partial_sum(&self, lo: usize, hi: usize) -> f64 {
        let mut acc = LogSum::new();
        for &v in &self.u[lo..hi] {
            acc.push(v);
        }
        acc.value()
    }

    /// Index of the minimum of `U`.
    pub fn argmin(&self) -> usize {
        self.u
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// CSV dump `n,U,logR` for `n = 0..N-1`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,U,logR")?;
        for n in 0..self.params.n {
            writeln!(w, "{n},{},{}", self.u[n], self.log_r_cum[n])?;
        }
        Ok(())
    }
}

/// Probability of hitting 0 before `upper` when started in `start`,
/// `(R_upper - R_start) / R_upper`.
pub fn exit_prob_down(table: &PotentialTable, start: usize, upper: usize) -> Result<f64> {
    let n = table.params.n;
    if upper == 0 || upper > n {
        return Err(Error::StateOutOfRange { state: upper, max: n });
    }
    if start > upper {
        return Err(Error::Domain(format!(
            "start {start} above upper barrier {upper}"
        )));
    }
    if start == 0 {
        return Ok(1.0);
    }
    if start == upper {
        return Ok(0.0);
    }
    let log_num = table.log_partial_sum(start, upper);
    Ok((log_num - table.log_r_cum(upper)).exp())
}

/// `E_N[T_a]` from the closed-form sum
/// `sum_{n=a+1}^{N-1} (R_n - R_a)/(lambda_n r_n) + (R_N - R_a)/(mu_N r_{N-1})`.
pub fn mean_time_top_to_center(table: &PotentialTable) -> f64 {
    let p = &table.params;
    let n = p.n;
    let a = table.derived.a_floor;
    if a >= n {
        return 0.0;
    }
    let mut total = LogSum::new();
    // Running log(R_k - R_a) = log sum_{i=a}^{k-1} r_i.
    let mut between = LogSum::new();
    for k in (a + 1)..n {
        between.push(table.u[k - 1]);
        total.push(between.value() - p.lambda(k).ln() - table.u[k]);
    }
    between.push(table.u[n - 1]);
    total.push(between.value() - p.mu(n).ln() - table.u[n - 1]);
    total.value().exp()
}

/// `E_start[T_0]` from `sum_{k=1}^{start} r_{k-1} sum_{j=k}^{N} 1 / (mu_j r_{j-1})`.
pub fn mean_extinction_time(table: &PotentialTable, start: usize) -> Result<f64> {
    let p = &table.params;
    let n = p.n;
    if start > n {
        return Err(Error::StateOutOfRange { state: start, max: n });
    }
    // Suffix sums over j, accumulated from the top.
    let mut suffix = vec![f64::NEG_INFINITY; n + 2];
    let mut acc = LogSum::new();
    for j in (1..=n).rev() {
        acc.push(-p.mu(j).ln() - table.u[j - 1]);
        suffix[j] = acc.value();
    }
    let mut total = LogSum::new();
    for k in 1..=start {
        total.push(table.u[k - 1] + suffix[k]);
    }
    Ok(if start == 0 { 0.0 } else { total.value().exp() })
}

/// `E_0[T_a]` for the softly reflected chain:
/// `sum_{k<a} r_k + sum_{n=1}^{a-1} (1/lambda_n) sum_{k=n}^{a-1} r_k / r_n`.
pub fn mean_reach_time_soft(table: &PotentialTable) -> f64 {
    let p = &table.params;
    let a = table.derived.a_floor.min(p.n);
    if a == 0 {
        return 0.0;
    }
    let mut total = LogSum::new();
    total.push(table.log_r_cum(a));
    // Suffix sums sum_{k=n}^{a-1} r_k, accumulated from the top.
    let mut suffix = LogSum::new();
    for k in (1..a).rev() {
        suffix.push(table.u[k]);
        total.push(suffix.value() - table.u[k] - p.lambda(k).ln());
    }
    total.value().exp()
}

/// Equilibrium of the softly reflected chain on `0..=N`, from the one-step
/// balance `pi(n+1) / pi(n) = lambda*_n / mu_{n+1}`.
pub fn pi_star(table: &PotentialTable) -> Vec<f64> {
    let p = &table.params;
    let n = p.n;
    let mut log_pi = Vec::with_capacity(n + 1);
    log_pi.push(0.0);
    let mut current = 0.0;
    for k in 0..n {
        current += p.lambda_star(k).ln() - p.mu(k + 1).ln();
        log_pi.push(current);
    }
    let log_z = crate::numeric::log_sum_exp(&log_pi);
    log_pi.iter().map(|l| (l - log_z).exp()).collect()
}
