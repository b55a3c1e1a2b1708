// SPDX-License-Identifier: Apache-2.0

//! Exact event-driven simulation of the fittest class, the softly reflected
//! chain, the two lowest classes and the full ratchet.
//!
//! Every replicate owns a ChaCha8 stream derived from
//! `(master_seed, replicate_index)`: the generator is seeded with
//! `master_seed` and switched to stream `replicate_index`. Replicates are
//! farmed out to a rayon pool and collected in index order, so results do
//! not depend on the worker count.

mod ou;
mod pair;
mod ratchet;
mod y0;
mod ystar;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use ou::{rescale_ou, stationary_window};
pub use pair::{simulate_pair, PairRecord, PairSampler};
pub use ratchet::{
    simulate_ratchet, Profile, RatchetOptions, RatchetRecord, RatchetSampler, RatchetStop,
};
pub use y0::{simulate_y0, ExtinctionRecord, Thinning, Y0Options, Y0Sampler};
pub use ystar::simulate_y_star;

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub type SimRng = ChaCha8Rng;

/// Stream identity of one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub replicate_index: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, replicate_index: u64) -> Self {
        Self {
            master_seed,
            replicate_index,
        }
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replicate_index);
        rng
    }
}

/// Run `count` replicates on `workers` threads. Output is in replicate order.
pub fn run_replicates<T, F>(master_seed: u64, count: usize, workers: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(RngSpec) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        (0..count as u64)
            .into_par_iter()
            .map(|i| job(RngSpec::new(master_seed, i)))
            .collect()
    })
}

/// Options shared by the registered simulators. Each reads only what it needs.
#[derive(Debug, Clone, Serialize)]
pub struct SimOptions {
    pub init: Option<usize>,
    pub init_second: usize,
    pub epsilon: f64,
    pub horizon: Option<f64>,
    pub duration: Option<f64>,
    pub clicks: usize,
    pub thinning: Thinning,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            init: None,
            init_second: 0,
            epsilon: y0::DEFAULT_EPSILON,
            horizon: None,
            duration: None,
            clicks: 10,
            thinning: Thinning::None,
        }
    }
}

/// Output of one replicate of a registered simulator.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum SimRecord {
    Extinction(ExtinctionRecord),
    Occupation(Vec<f64>),
    Pair(PairRecord),
    Ratchet(RatchetRecord),
}

/// A named simulation engine selectable at runtime.
pub trait Simulator: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Header of the per-replicate CSV (without the leading `replicate`).
    fn csv_header(&self) -> &'static str;
    fn run(&self, p: &ModelParams, opts: &SimOptions, spec: RngSpec) -> Result<SimRecord>;
}

struct Y0Engine;
struct YStarEngine;
struct PairEngine;
struct RatchetEngine;

impl Simulator for Y0Engine {
    fn name(&self) -> &'static str {
        "y0"
    }
    fn summary(&self) -> &'static str {
        "fittest-class chain until extinction"
    }
    fn csv_header(&self) -> &'static str {
        "t0,n_events,last_visit_time,mutation_deaths_after_L,censored"
    }
    fn run(&self, p: &ModelParams, opts: &SimOptions, spec: RngSpec) -> Result<SimRecord> {
        let init = opts.init.unwrap_or(p.derived().a_floor);
        let y0_opts = Y0Options {
            epsilon: opts.epsilon,
            horizon: opts.horizon,
            thinning: opts.thinning,
        };
        Ok(SimRecord::Extinction(simulate_y0(p, init, &y0_opts, &mut spec.rng())?))
    }
}

impl Simulator for YStarEngine {
    fn name(&self) -> &'static str {
        "ystar"
    }
    fn summary(&self) -> &'static str {
        "softly reflected chain, time-weighted occupation"
    }
    fn csv_header(&self) -> &'static str {
        "n,occupation"
    }
    fn run(&self, p: &ModelParams, opts: &SimOptions, spec: RngSpec) -> Result<SimRecord> {
        let d = p.derived();
        let init = opts.init.unwrap_or(d.a_floor);
        let duration = opts.duration.unwrap_or(1000.0 * d.c);
        Ok(SimRecord::Occupation(simulate_y_star(p, init, duration, &mut spec.rng())?))
    }
}

impl Simulator for PairEngine {
    fn name(&self) -> &'static str {
        "pair"
    }
    fn summary(&self) -> &'static str {
        "two lowest classes until the fittest one dies"
    }
    fn csv_header(&self) -> &'static str {
        "t0,y1_at_t0,max_y1,n_events,censored"
    }
    fn run(&self, p: &ModelParams, opts: &SimOptions, spec: RngSpec) -> Result<SimRecord> {
        let init = opts.init.unwrap_or(p.derived().a_floor);
        Ok(SimRecord::Pair(simulate_pair(
            p,
            init,
            opts.init_second,
            opts.horizon,
            &mut spec.rng(),
        )?))
    }
}

impl Simulator for RatchetEngine {
    fn name(&self) -> &'static str {
        "ratchet"
    }
    fn summary(&self) -> &'static str {
        "full tournament ratchet, click times"
    }
    fn csv_header(&self) -> &'static str {
        "click,time,new_class_size"
    }
    fn run(&self, p: &ModelParams, opts: &SimOptions, spec: RngSpec) -> Result<SimRecord> {
        let profile = match opts.init {
            Some(n0) if n0 < p.n => Profile::from_pairs(&[(0, n0 as u64), (1, (p.n - n0) as u64)]),
            _ => Profile::all_in_class_zero(p.n),
        };
        let ropts = RatchetOptions {
            stop: RatchetStop {
                clicks: Some(opts.clicks),
                horizon: opts.horizon,
                deadline: None,
            },
            snapshot_times: Vec::new(),
        };
        Ok(SimRecord::Ratchet(simulate_ratchet(p, &profile, &ropts, &mut spec.rng())?))
    }
}

static SIMULATORS: [&dyn Simulator; 4] = [&Y0Engine, &YStarEngine, &PairEngine, &RatchetEngine];

pub fn simulators() -> &'static [&'static dyn Simulator] {
    &SIMULATORS
}

pub fn find_simulator(name: &str) -> Result<&'static dyn Simulator> {
    SIMULATORS
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownName {
            name: name.to_string(),
            valid: SIMULATORS.iter().map(|s| s.name()).collect::<Vec<_>>().join(", "),
        })
}

impl SimRecord {
    /// CSV rows for this record, each prefixed by the replicate index.
    pub fn csv_rows(&self, replicate: usize) -> Vec<String> {
        match self {
            SimRecord::Extinction(r) => vec![format!(
                "{replicate},{},{},{},{},{}",
                r.t0, r.n_events, r.last_visit_time, r.mutation_deaths_after_l, r.censored
            )],
            SimRecord::Occupation(h) => h
                .iter()
                .enumerate()
                .map(|(n, w)| format!("{replicate},{n},{w}"))
                .collect(),
            SimRecord::Pair(r) => vec![format!(
                "{replicate},{},{},{},{},{}",
                r.t0, r.y1_at_t0, r.max_y1, r.n_events, r.censored
            )],
            SimRecord::Ratchet(r) => r
                .click_times
                .iter()
                .zip(&r.new_class_sizes)
                .enumerate()
                .map(|(i, (t, size))| format!("{replicate},{},{t},{size}", i + 1))
                .collect(),
        }
    }

    /// Thinned path as `time,state` CSV, if the record carries one.
    pub fn path_csv(&self) -> Option<String> {
        let SimRecord::Extinction(r) = self else {
            return None;
        };
        let path = r.path.as_ref()?;
        let mut out = String::from("time,state\n");
        for (t, y) in path {
            let _ = writeln!(out, "{t},{y}");
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = RngSpec::new(7, 3).rng();
            (0..4).map(|_| r.random()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RngSpec::new(7, 3).rng();
            (0..4).map(|_| r.random()).collect()
        };
        let c: Vec<u64> = {
            let mut r = RngSpec::new(7, 4).rng();
            (0..4).map(|_| r.random()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn replicate_results_independent_of_workers() {
        let job = |spec: RngSpec| -> u64 { spec.rng().random() };
        let one = run_replicates(11, 64, 1, job);
        let many = run_replicates(11, 64, 4, job);
        assert_eq!(one, many);
    }

    #[test]
    fn registry_lookup() {
        for name in ["y0", "ystar", "pair", "ratchet"] {
            assert_eq!(find_simulator(name).unwrap().name(), name);
        }
        let err = find_simulator("moran").err().unwrap().to_string();
        assert!(err.contains("y0, ystar, pair, ratchet"), "{err}");
    }
}
