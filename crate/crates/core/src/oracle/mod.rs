// SPDX-License-Identifier: Apache-2.0

//! Exact finite-chain computations on the tridiagonal generator.
//!
//! These are the ground truth the closed-form sums in [`crate::potential`]
//! and the simulators in [`crate::sim`] are checked against. Nothing here
//! touches the potential tables.

pub mod naive;
mod tridiag;

use std::io::{self, Write};

use serde::Serialize;

pub use tridiag::solve_tridiagonal;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Up and down rates of a birth-death chain on `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub absorbing_zero: bool,
}

impl ChainSpec {
    pub fn new(up: Vec<f64>, down: Vec<f64>, absorbing_zero: bool) -> Result<Self> {
        if up.len() != down.len() || up.len() < 2 {
            return Err(Error::Degenerate(format!(
                "rate arrays of length {} and {}",
                up.len(),
                down.len()
            )));
        }
        if up.iter().chain(down.iter()).any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Degenerate("rates must be finite and nonnegative".into()));
        }
        if absorbing_zero && (up[0] != 0.0 || down[0] != 0.0) {
            return Err(Error::Degenerate("absorbing zero needs zero rates at 0".into()));
        }
        Ok(Self {
            up,
            down,
            absorbing_zero,
        })
    }

    /// The fittest-class chain, absorbed at 0.
    pub fn y0(p: &ModelParams) -> Self {
        let up = (0..=p.n).map(|k| p.lambda(k)).collect();
        let down = (0..=p.n).map(|k| p.mu(k)).collect();
        Self {
            up,
            down,
            absorbing_zero: true,
        }
    }

    /// The softly reflected chain: jumps `0 -> 1` at rate 1.
    pub fn y_star(p: &ModelParams) -> Self {
        let mut chain = Self::y0(p);
        chain.up[0] = 1.0;
        chain.absorbing_zero = false;
        chain
    }

    /// Top state `N`.
    pub fn top(&self) -> usize {
        self.up.len() - 1
    }
}

/// Expected time `k -> k-1` for every `k >= 1`, eliminated from the top:
/// `mu_k g_k = 1 + lambda_k g_{k+1}` with `g_{N+1} = 0`.
fn downward_steps(chain: &ChainSpec, lowest: usize) -> Result<Vec<f64>> {
    let top = chain.top();
    let mut g = vec![0.0; top + 2];
    for k in (lowest.max(1)..=top).rev() {
        let mu = chain.down[k];
        if mu <= 0.0 {
            return Err(Error::Degenerate(format!("zero downward rate at state {k}")));
        }
        let up = if k == top { 0.0 } else { chain.up[k] };
        g[k] = (1.0 + up * g[k + 1]) / mu;
    }
    Ok(g)
}

/// `E_n[T_0]` for `n = 0..=N`.
///
/// One backward elimination divided through by `mu_n` (so every pivot is
/// 1 and intermediate values stay finite) followed by a forward cumulative
/// sum.
pub fn mean_absorption_times(chain: &ChainSpec) -> Result<Vec<f64>> {
    if !chain.absorbing_zero {
        return Err(Error::Degenerate("chain has no absorbing state".into()));
    }
    let top = chain.top();
    if chain.up[top] != 0.0 {
        return Err(Error::Degenerate("top state must not jump upward".into()));
    }
    let g = downward_steps(chain, 1)?;
    let mut h = Vec::with_capacity(top + 1);
    h.push(0.0);
    let mut acc = 0.0;
    for &step in &g[1..=top] {
        acc += step;
        h.push(acc);
    }
    Ok(h)
}

/// Expected first-passage time to `target` from every state; infinite where
/// the target is unreachable.
pub fn first_passage_times_to(chain: &ChainSpec, target: usize) -> Result<Vec<f64>> {
    let top = chain.top();
    if target > top {
        return Err(Error::StateOutOfRange { state: target, max: top });
    }
    let mut times = vec![0.0; top + 1];
    if target < top {
        let g = downward_steps(chain, target + 1)?;
        let mut acc = 0.0;
        for k in (target + 1)..=top {
            acc += g[k];
            times[k] = acc;
        }
    }
    // Upward steps k -> k+1: lambda_k t_k = 1 + mu_k t_{k-1}.
    let mut t = vec![0.0; target];
    let mut prev = 0.0;
    for k in 0..target {
        let down = if k == 0 { 0.0 } else { chain.down[k] };
        if k == 0 && chain.down[0] > 0.0 {
            return Err(Error::Degenerate("state 0 cannot jump downward".into()));
        }
        let up = chain.up[k];
        t[k] = if up > 0.0 {
            (1.0 + down * prev) / up
        } else {
            f64::INFINITY
        };
        prev = t[k];
    }
    let mut acc = 0.0;
    for k in (0..target).rev() {
        acc += t[k];
        times[k] = acc;
    }
    Ok(times)
}

/// `P_k(T_0 < T_upper)` for `k = 0..=upper`, by solving the harmonic system
/// `(lambda_k + mu_k) h_k = lambda_k h_{k+1} + mu_k h_{k-1}` with
/// `h_0 = 1`, `h_upper = 0`.
pub fn exit_probabilities(chain: &ChainSpec, upper: usize) -> Result<Vec<f64>> {
    let top = chain.top();
    if upper == 0 || upper > top {
        return Err(Error::StateOutOfRange { state: upper, max: top });
    }
    let mut out = vec![0.0; upper + 1];
    out[0] = 1.0;
    if upper == 1 {
        return Ok(out);
    }
    // Unknowns h_1 .. h_{upper-1}.
    let size = upper - 1;
    let mut sub = vec![0.0; size];
    let mut diag = vec![0.0; size];
    let mut sup = vec![0.0; size];
    let mut rhs = vec![0.0; size];
    for i in 0..size {
        let k = i + 1;
        let (up, down) = (chain.up[k], chain.down[k]);
        if up + down <= 0.0 {
            return Err(Error::Degenerate(format!("zero total rate at state {k}")));
        }
        // Normalised rows keep the elimination well scaled.
        let total = up + down;
        diag[i] = 1.0;
        if i > 0 {
            sub[i] = -down / total;
        } else {
            rhs[i] = down / total;
        }
        if i + 1 < size {
            sup[i] = -up / total;
        }
    }
    let h = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    out[1..upper].copy_from_slice(&h);
    Ok(out)
}

/// Quasi-stationary distribution and its decay rate.
#[derive(Debug, Clone, Serialize)]
pub struct QsdResult {
    /// `alpha[k - 1]` is the weight of state `k`, `k = 1..=N`.
    pub alpha: Vec<f64>,
    pub theta: f64,
    pub iterations: usize,
}

impl QsdResult {
    /// Weight of state `k` (0 for the absorbing state).
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.alpha[k - 1]
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QsdOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for QsdOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            tolerance: 1e-13,
        }
    }
}

/// Upper limit on `N` for the dense-vector iteration.
pub const QSD_MAX_STATES: usize = 100_000;

pub fn quasi_stationary(chain: &ChainSpec) -> Result<QsdResult> {
    quasi_stationary_with(chain, QsdOptions::default())
}

/// Left Perron vector of the sub-generator on `1..=N` by inverse power
/// iteration with zero shift. `theta` comes from the flux through state 1.
pub fn quasi_stationary_with(chain: &ChainSpec, opts: QsdOptions) -> Result<QsdResult> {
    if !chain.absorbing_zero {
        return Err(Error::Degenerate("chain has no absorbing state".into()));
    }
    let top = chain.top();
    if top > QSD_MAX_STATES {
        return Err(Error::Domain(format!(
            "N = {top} exceeds the dense iteration budget of {QSD_MAX_STATES}"
        )));
    }
    // Transposed sub-generator: row k has -(lambda_k + mu_k) on the
    // diagonal, lambda_{k-1} below and mu_{k+1} above.
    let size = top;
    let mut sub = vec![0.0; size];
    let mut diag = vec![0.0; size];
    let mut sup = vec![0.0; size];
    for i in 0..size {
        let k = i + 1;
        diag[i] = -(chain.up[k] + chain.down[k]);
        if i > 0 {
            sub[i] = chain.up[k - 1];
        }
        if i + 1 < size {
            sup[i] = chain.down[k + 1];
        }
    }
    let mut current = vec![1.0 / size as f64; size];
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iterations {
        let next = solve_tridiagonal(&sub, &diag, &sup, &current)?;
        let total: f64 = next.iter().sum();
        if !(total.is_finite() && total != 0.0) {
            return Err(Error::NoConvergence {
                iterations: iteration,
                residual,
            });
        }
        let next: Vec<f64> = next.iter().map(|v| (v / total).max(0.0)).collect();
        residual = tv_distance(&next, &current)?;
        current = next;
        if residual < opts.tolerance {
            let norm: f64 = current.iter().sum();
            current.iter_mut().for_each(|v| *v /= norm);
            let theta = current[0] * chain.down[1];
            return Ok(QsdResult {
                alpha: current,
                theta,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual,
    })
}

/// Total variation distance `sum |p - q| / 2`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Domain(format!(
            "support sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// CSV dump `n,h,alpha` for `n = 0..=N`.
pub fn write_csv<W: Write>(mut w: W, h: &[f64], qsd: &QsdResult) -> io::Result<()> {
    writeln!(w, "n,h,alpha")?;
    for (n, hn) in h.iter().enumerate() {
        writeln!(w, "{n},{hn},{}", qsd.weight(n))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_diff;

    fn tiny() -> ModelParams {
        ModelParams::new(20, 0.1, 0.2).unwrap()
    }

    fn sim() -> ModelParams {
        ModelParams::from_rho(2000, 0.025, 0.75).unwrap()
    }

    fn residual(chain: &ChainSpec, h: &[f64]) -> f64 {
        let top = chain.top();
        let mut worst = 0.0f64;
        for k in 1..top {
            let (l, m) = (chain.up[k], chain.down[k]);
            let r = (l + m) * h[k] - 1.0 - l * h[k + 1] - m * h[k - 1];
            worst = worst.max(r.abs());
        }
        let r = chain.down[top] * h[top] - 1.0 - chain.down[top] * h[top - 1];
        worst.max(r.abs())
    }

    #[test]
    fn absorption_times_solve_the_system() {
        for p in [tiny(), sim()] {
            let chain = ChainSpec::y0(&p);
            let h = mean_absorption_times(&chain).unwrap();
            assert_eq!(h[0], 0.0);
            for k in 1..h.len() {
                assert!(h[k].is_finite() && h[k] > h[k - 1]);
            }
            let max = h.iter().cloned().fold(0.0, f64::max);
            assert!(residual(&chain, &h) <= 1e-9 * max);
        }
    }

    #[test]
    fn absorption_time_matches_naive_recursion() {
        let p = tiny();
        let h = mean_absorption_times(&ChainSpec::y0(&p)).unwrap();
        let naive = naive::absorption_time(&p, 10);
        assert!(rel_diff(h[10], naive) < 1e-10);
    }

    #[test]
    fn absorption_rejects_reflecting_chain() {
        assert!(mean_absorption_times(&ChainSpec::y_star(&tiny())).is_err());
        assert!(quasi_stationary(&ChainSpec::y_star(&tiny())).is_err());
    }

    #[test]
    fn chain_spec_validation() {
        assert!(ChainSpec::new(vec![1.0, 0.0], vec![0.0, 1.0], true).is_err());
        assert!(ChainSpec::new(vec![0.0, -1.0], vec![0.0, 1.0], true).is_err());
        assert!(ChainSpec::new(vec![0.0], vec![0.0], true).is_err());
        assert!(ChainSpec::new(vec![0.0, 0.0], vec![0.0, 1.0], true).is_ok());
    }

    #[test]
    fn first_passage_zero_at_target() {
        let p = tiny();
        let ft = first_passage_times_to(&ChainSpec::y_star(&p), 10).unwrap();
        assert_eq!(ft[10], 0.0);
        assert!(ft[0] > ft[5] && ft[20] > ft[15]);
        // Unreachable from the absorbing state.
        let ft0 = first_passage_times_to(&ChainSpec::y0(&p), 10).unwrap();
        assert!(ft0[0].is_infinite());
        assert!(ft0[1].is_infinite());
        assert!(first_passage_times_to(&ChainSpec::y0(&p), 21).is_err());
    }

    #[test]
    fn first_passage_to_zero_is_absorption_time() {
        let p = sim();
        let chain = ChainSpec::y0(&p);
        let a = mean_absorption_times(&chain).unwrap();
        let b = first_passage_times_to(&chain, 0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(rel_diff(*x, *y) < 1e-14);
        }
    }

    #[test]
    fn exit_probabilities_are_harmonic() {
        let p = tiny();
        let chain = ChainSpec::y0(&p);
        let h = exit_probabilities(&chain, 10).unwrap();
        assert_eq!(h[0], 1.0);
        assert_eq!(h[10], 0.0);
        for k in 1..10 {
            let (l, m) = (chain.up[k], chain.down[k]);
            let lhs = h[k];
            let rhs = (l * h[k + 1] + m * h[k - 1]) / (l + m);
            assert!((lhs - rhs).abs() < 1e-15);
            assert!(h[k] < h[k - 1]);
        }
    }

    #[test]
    fn qsd_flux_and_mean_identities() {
        for p in [tiny(), sim()] {
            let chain = ChainSpec::y0(&p);
            let q = quasi_stationary(&chain).unwrap();
            let total: f64 = q.alpha.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(q.theta > 0.0);
            assert!(rel_diff(q.theta, q.alpha[0] * p.mu(1)) < 1e-8);
            let h = mean_absorption_times(&chain).unwrap();
            let mean: f64 = (1..=p.n).map(|k| q.weight(k) * h[k]).sum();
            assert!((q.theta * mean - 1.0).abs() < 1e-6, "{}", q.theta * mean);
        }
    }

    #[test]
    fn qsd_is_a_left_eigenvector() {
        let p = sim();
        let chain = ChainSpec::y0(&p);
        let q = quasi_stationary(&chain).unwrap();
        let n = p.n;
        let out = |k: usize| (chain.up[k] + chain.down[k]) * q.weight(k);
        let peak = (1..=n).map(out).fold(0.0, f64::max);
        for k in 1..=n {
            let mut inflow = 0.0;
            if k > 1 {
                inflow += chain.up[k - 1] * q.weight(k - 1);
            }
            if k < n {
                inflow += chain.down[k + 1] * q.weight(k + 1);
            }
            let residual = (inflow - out(k) + q.theta * q.weight(k)).abs();
            assert!(residual <= 1e-8 * (inflow + out(k)) + 1e-13 * peak, "k={k} residual {residual}");
        }
    }

    #[test]
    fn qsd_respects_iteration_cap() {
        let chain = ChainSpec::y0(&sim());
        let err = quasi_stationary_with(
            &chain,
            QsdOptions {
                max_iterations: 1,
                tolerance: 1e-13,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 1, .. }));
    }

    #[test]
    fn tv_distance_cases() {
        assert_eq!(tv_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 0.5);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }
}
