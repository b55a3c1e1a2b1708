// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::potential::e_n;

pub const DEFAULT_EPSILON: f64 = 1.0 / 24.0;

/// Which path points to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub enum Thinning {
    #[default]
    None,
    /// State at every multiple of the given time step.
    Grid(f64),
    /// Every jump.
    Full,
}

#[derive(Debug, Clone, Copy)]
pub struct Y0Options {
    /// Level `floor(2 epsilon a)` whose last visit starts the mutation count.
    pub epsilon: f64,
    /// Censoring horizon; defaults to `50 e_N`.
    pub horizon: Option<f64>,
    pub thinning: Thinning,
}

impl Default for Y0Options {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            horizon: None,
            thinning: Thinning::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtinctionRecord {
    pub t0: f64,
    pub n_events: u64,
    pub last_visit_time: f64,
    pub mutation_deaths_after_l: u64,
    pub censored: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<(f64, u32)>>,
}

/// Precomputed jump tables for one parameter set, shared across replicates.
#[derive(Debug, Clone)]
pub struct Y0Sampler {
    params: ModelParams,
    inv_total: Vec<f64>,
    p_up: Vec<f64>,
    mutation_share: Vec<f64>,
    default_horizon: f64,
}

impl Y0Sampler {
    pub fn new(p: &ModelParams) -> Self {
        let n = p.n;
        let mut inv_total = Vec::with_capacity(n + 1);
        let mut p_up = Vec::with_capacity(n + 1);
        let mut mutation_share = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let (up, down) = (p.lambda(k), p.mu(k));
            let total = up + down;
            inv_total.push(if total > 0.0 { 1.0 / total } else { 0.0 });
            p_up.push(if total > 0.0 { up / total } else { 0.0 });
            mutation_share.push(if k > 0 { p.mutation_share(k) } else { 0.0 });
        }
        Self {
            params: *p,
            inv_total,
            p_up,
            mutation_share,
            default_horizon: default_horizon(p),
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, init: usize, opts: &Y0Options, rng: &mut R) -> Result<ExtinctionRecord> {
        let p = &self.params;
        if init > p.n {
            return Err(Error::StateOutOfRange { state: init, max: p.n });
        }
        if !(opts.epsilon > 0.0 && opts.epsilon < 1.0 / 3.0) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, 1/3), got {}",
                opts.epsilon
            )));
        }
        let horizon = opts.horizon.unwrap_or(self.default_horizon);
        let level = (2.0 * opts.epsilon * p.derived().a).floor() as usize;
        let mut path = match opts.thinning {
            Thinning::None => None,
            _ => Some(Vec::new()),
        };
        let mut state = init;
        let mut t = 0.0f64;
        let mut n_events = 0u64;
        let mut last_visit = 0.0;
        let mut mutation_deaths = 0u64;
        let mut next_grid = 0usize;
        if let (Some(path), Thinning::Full) = (path.as_mut(), opts.thinning) {
            path.push((0.0, state as u32));
        }
        while state > 0 {
            let hold: f64 = rng.sample::<f64, _>(Exp1) * self.inv_total[state];
            let t_next = t + hold;
            if t_next > horizon {
                if let (Some(path), Thinning::Grid(step)) = (path.as_mut(), opts.thinning) {
                    push_grid(path, &mut next_grid, step, horizon, state);
                }
                return Ok(ExtinctionRecord {
                    t0: horizon,
                    n_events,
                    last_visit_time: last_visit,
                    mutation_deaths_after_l: mutation_deaths,
                    censored: true,
                    path,
                });
            }
            if let (Some(path), Thinning::Grid(step)) = (path.as_mut(), opts.thinning) {
                push_grid(path, &mut next_grid, step, t_next, state);
            }
            t = t_next;
            n_events += 1;
            let u: f64 = rng.random();
            if u < self.p_up[state] {
                state += 1;
            } else {
                // Reuse the uniform: conditional on a down-jump, (u - p_up) / (1 - p_up)
                // is uniform on [0, 1).
                let p_up = self.p_up[state];
                let v = (u - p_up) / (1.0 - p_up);
                if v < self.mutation_share[state] {
                    mutation_deaths += 1;
                }
                state -= 1;
            }
            if state == level {
                last_visit = t;
                mutation_deaths = 0;
            }
            if let (Some(path), Thinning::Full) = (path.as_mut(), opts.thinning) {
                path.push((t, state as u32));
            }
        }
        Ok(ExtinctionRecord {
            t0: t,
            n_events,
            last_visit_time: last_visit,
            mutation_deaths_after_l: mutation_deaths,
            censored: false,
            path,
        })
    }
}

impl Y0Sampler {
    /// Run the embedded jump chain from `start` until it leaves
    /// `(lower, upper)`; true if `lower` is reached first.
    pub fn hits_lower_first<R: Rng + ?Sized>(&self, start: usize, lower: usize, upper: usize, rng: &mut R) -> Result<bool> {
        if !(lower <= start && start <= upper && upper <= self.params.n) {
            return Err(Error::Domain(format!(
                "need lower <= start <= upper <= N, got {lower}, {start}, {upper}"
            )));
        }
        let mut state = start;
        while state > lower && state < upper {
            if rng.random::<f64>() < self.p_up[state] {
                state += 1;
            } else {
                state -= 1;
            }
        }
        Ok(state == lower && lower < upper)
    }
}

/// Record the pre-jump `state` at every grid point strictly before `until`.
#[inline]
fn push_grid(path: &mut Vec<(f64, u32)>, next: &mut usize, step: f64, until: f64, state: usize) {
    loop {
        let g = *next as f64 * step;
        if g >= until {
            break;
        }
        path.push((g, state as u32));
        *next += 1;
    }
}

pub(crate) fn default_horizon(p: &ModelParams) -> f64 {
    let log_h = 50f64.ln() + e_n(p).log;
    if log_h > 700.0 {
        f64::INFINITY
    } else {
        log_h.exp()
    }
}

/// Simulate the fittest-class chain from `init` until extinction or the
/// horizon.
///
/// Down-jumps from `k` are attributed to mutation with probability
/// `m k / mu_k`; the mutation count restarts at every visit to
/// `floor(2 epsilon a)`.
pub fn simulate_y0<R: Rng + ?Sized>(
    p: &ModelParams,
    init: usize,
    opts: &Y0Options,
    rng: &mut R,
) -> Result<ExtinctionRecord> {
    Y0Sampler::new(p).run(init, opts, rng)
}
