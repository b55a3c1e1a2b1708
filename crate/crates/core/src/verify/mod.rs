// SPDX-License-Identifier: Apache-2.0

//! Named verification suites, each a set of gated checks on exact analytics
//! or simulation output.
//!
//! Suites are registered by name and selected at runtime. Simulation runs
//! that several suites consume (extinction replicates, ratchet runs) are
//! computed once per [`VerifyContext`] and shared.

mod analytic;
mod stochastic;

use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::stats::{Gate, TestReport};

pub use stochastic::{RatchetRuns, SharedRuns};

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// `N = 1e5, m = 1e-3, rho = 0.68`.
pub fn p_fig1() -> ModelParams {
    ModelParams::from_rho(100_000, 1e-3, 0.68).expect("valid reference parameters")
}

/// `N = 2000, m = 0.025, rho = 0.75` (`u = 3.125`, `a = 500`, `c = 120`).
pub fn p_sim() -> ModelParams {
    ModelParams::from_rho(2000, 0.025, 0.75).expect("valid reference parameters")
}

/// `N = 20, m = 0.1, s = 0.2`.
pub fn p_tiny() -> ModelParams {
    ModelParams::new(20, 0.1, 0.2).expect("valid reference parameters")
}

/// Smaller ratchet set (`u = 2.5`) used when the full click run exceeds its
/// budget.
pub fn p_ratchet_fallback() -> ModelParams {
    ModelParams::from_rho(1600, 0.025, 0.75).expect("valid reference parameters")
}

/// Shared state of one verification session.
pub struct VerifyContext {
    pub seed: u64,
    pub workers: usize,
    /// Wall-clock budget of the full ratchet run before falling back.
    pub ratchet_budget: Duration,
    runs: OnceLock<SharedRuns>,
    ratchet: OnceLock<RatchetRuns>,
    runs_init: Mutex<()>,
    ratchet_init: Mutex<()>,
}

impl VerifyContext {
    pub fn new(seed: u64, workers: usize) -> Self {
        Self {
            seed,
            workers: workers.max(1),
            ratchet_budget: Duration::from_secs(2 * 3600),
            runs: OnceLock::new(),
            ratchet: OnceLock::new(),
            runs_init: Mutex::new(()),
            ratchet_init: Mutex::new(()),
        }
    }

    /// Independent master seed for the run labelled `tag`.
    pub fn stream_seed(&self, tag: u64) -> u64 {
        // SplitMix64 finaliser of seed + tag.
        let mut z = self.seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn shared_runs(&self) -> Result<&SharedRuns> {
        let _guard = self.runs_init.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(r) = self.runs.get() {
            return Ok(r);
        }
        let runs = SharedRuns::compute(self)?;
        Ok(self.runs.get_or_init(|| runs))
    }

    pub fn ratchet_runs(&self) -> Result<&RatchetRuns> {
        let _guard = self.ratchet_init.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(r) = self.ratchet.get() {
            return Ok(r);
        }
        let runs = RatchetRuns::compute(self)?;
        Ok(self.ratchet.get_or_init(|| runs))
    }
}

/// A named group of checks.
pub trait Suite: Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    /// Acceptance criteria covered by this suite.
    fn criteria(&self) -> &'static [u8];
    fn run(&self, ctx: &VerifyContext) -> Result<Vec<TestReport>>;
}

static SUITES: [&dyn Suite; 9] = [
    &analytic::PotentialIdentity,
    &analytic::QuadraticWell,
    &analytic::HittingTimes,
    &analytic::QsdGaussian,
    &stochastic::ExtinctionExponential,
    &stochastic::OuFluctuations,
    &stochastic::MutationSupply,
    &stochastic::PairClick,
    &stochastic::RatchetPoisson,
];

pub fn suites() -> &'static [&'static dyn Suite] {
    &SUITES
}

/// Valid names for [`run_named`], including `all`.
pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name()).chain(["all"]).collect()
}

pub fn find_suite(name: &str) -> Result<&'static dyn Suite> {
    SUITES
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownName {
            name: name.to_string(),
            valid: suite_names().join(", "),
        })
}

/// Run one suite by name, or every suite for `all`.
pub fn run_named(name: &str, ctx: &VerifyContext) -> Result<Vec<TestReport>> {
    if name == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            log::info!("running suite {}", s.name());
            out.extend(s.run(ctx)?);
        }
        return Ok(out);
    }
    find_suite(name)?.run(ctx)
}

/// Reports belonging to acceptance criterion `k`.
pub fn for_criterion(reports: &[TestReport], k: u8) -> Vec<&TestReport> {
    reports.iter().filter(|r| r.criterion == Some(k)).collect()
}

/// Gated wall-clock check.
pub(crate) fn runtime_report(suite: &str, criterion: u8, started: Instant, budget_secs: f64) -> TestReport {
    let elapsed = started.elapsed().as_secs_f64();
    TestReport::new("runtime", elapsed, format!("{budget_secs} s budget"), Gate::LessThan { max: budget_secs })
        .labeled(suite, "runtime_seconds", Some(criterion))
}
