// SPDX-License-Identifier: Apache-2.0

//! Simulation-backed suites: extinction law, OU fluctuations, mutation
//! supply, the two-class click and the Poisson structure of ratchet clicks.

use std::time::Instant;

use super::{p_ratchet_fallback, p_sim, Suite, VerifyContext};
use crate::error::Result;
use crate::model::ModelParams;
use crate::oracle::{mean_absorption_times, ChainSpec};
use crate::sim::{
    rescale_ou, run_replicates, simulate_pair, stationary_window, ExtinctionRecord, Profile,
    RatchetOptions, RatchetRecord, RatchetSampler, RatchetStop, Thinning, Y0Options, Y0Sampler,
};
use crate::stats::{
    index_of_counts, ks_test, ks_two_sample, mean_and_se, median, pooled_autocorr, pooled_moments,
    window_counts, Gate, RefCdf, TestReport,
};

const CENTER_REPLICATES: usize = 320;
const PAIR_REPLICATES: usize = 200;
const RATCHET_LONG_RUNS: usize = 50;
const RATCHET_CLICKS: usize = 11;
const RATCHET_SHORT_RUNS: usize = 150;
const TOP_REPLICATES: usize = 200;

/// Grid step of stored paths, in units of `c`.
const GRID_FRACTION: f64 = 0.1;
/// Rescaled time dropped at the start and before extinction.
const BURN_IN: f64 = 2.0;
const TAIL: f64 = 5.0;

mod tag {
    pub const CENTER: u64 = 2;
    pub const PAIR: u64 = 3;
    pub const RATCHET_LONG: u64 = 4;
    pub const RATCHET_SHORT: u64 = 5;
    pub const TOP: u64 = 6;
    pub const FALLBACK: u64 = 100;
}

/// Extinction replicates of the fittest class from `floor(a)` at P_sim.
pub struct SharedRuns {
    pub params: ModelParams,
    pub records: Vec<ExtinctionRecord>,
    /// Exact `E_{floor(a)}[T_0]`.
    pub oracle_mean: f64,
    pub elapsed_secs: f64,
}

impl SharedRuns {
    pub(crate) fn compute(ctx: &VerifyContext) -> Result<Self> {
        let started = Instant::now();
        let p = p_sim();
        let d = p.derived();
        let sampler = Y0Sampler::new(&p);
        let opts = Y0Options {
            thinning: Thinning::Grid(GRID_FRACTION * d.c),
            ..Y0Options::default()
        };
        let records = run_replicates(ctx.stream_seed(tag::CENTER), CENTER_REPLICATES, ctx.workers, |spec| {
            sampler.run(d.a_floor, &opts, &mut spec.rng())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let oracle_mean = mean_absorption_times(&ChainSpec::y0(&p))?[d.a_floor];
        Ok(Self {
            params: p,
            records,
            oracle_mean,
            elapsed_secs: started.elapsed().as_secs_f64(),
        })
    }

    fn uncensored(&self) -> impl Iterator<Item = &ExtinctionRecord> {
        self.records.iter().filter(|r| !r.censored)
    }

    fn censored_count(&self) -> usize {
        self.records.iter().filter(|r| r.censored).count()
    }
}

/// Ratchet click runs plus the matching fittest-class runs from `N`.
pub struct RatchetRuns {
    pub params: ModelParams,
    pub long: Vec<RatchetRecord>,
    pub short: Vec<RatchetRecord>,
    pub top: Vec<ExtinctionRecord>,
    /// Whether the budget forced the fallback parameter set.
    pub fell_back: bool,
    pub elapsed_secs: f64,
}

impl RatchetRuns {
    pub(crate) fn compute(ctx: &VerifyContext) -> Result<Self> {
        let started = Instant::now();
        let deadline = started + ctx.ratchet_budget;
        let primary = p_sim();
        let long = ratchet_batch(ctx, &primary, RATCHET_LONG_RUNS, RATCHET_CLICKS, tag::RATCHET_LONG, Some(deadline))?;
        let (params, long, offset) = if long.iter().any(|r| r.timed_out) {
            let p = p_ratchet_fallback();
            log::warn!(
                "ratchet runs exceeded the {:?} budget; rerunning at N = {}",
                ctx.ratchet_budget,
                p.n
            );
            let long = ratchet_batch(ctx, &p, RATCHET_LONG_RUNS, RATCHET_CLICKS, tag::FALLBACK + tag::RATCHET_LONG, None)?;
            (p, long, tag::FALLBACK)
        } else {
            (primary, long, 0)
        };
        let short = ratchet_batch(ctx, &params, RATCHET_SHORT_RUNS, 1, offset + tag::RATCHET_SHORT, None)?;
        let sampler = Y0Sampler::new(&params);
        let opts = Y0Options::default();
        let top = run_replicates(ctx.stream_seed(offset + tag::TOP), TOP_REPLICATES, ctx.workers, |spec| {
            sampler.run(params.n, &opts, &mut spec.rng())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            long,
            short,
            top,
            fell_back: offset != 0,
            elapsed_secs: started.elapsed().as_secs_f64(),
        })
    }

    /// First click of every ratchet run, long and short.
    pub fn first_clicks(&self) -> Vec<f64> {
        self.long
            .iter()
            .chain(&self.short)
            .filter_map(|r| r.click_times.first().copied())
            .collect()
    }
}

fn ratchet_batch(
    ctx: &VerifyContext,
    p: &ModelParams,
    runs: usize,
    clicks: usize,
    stream_tag: u64,
    deadline: Option<Instant>,
) -> Result<Vec<RatchetRecord>> {
    let sampler = RatchetSampler::new(p);
    let init = Profile::all_in_class_zero(p.n);
    let opts = RatchetOptions {
        stop: RatchetStop {
            clicks: Some(clicks),
            horizon: None,
            deadline,
        },
        snapshot_times: Vec::new(),
    };
    run_replicates(ctx.stream_seed(stream_tag), runs, ctx.workers, |spec| {
        sampler.run(&init, &opts, &mut spec.rng())
    })
    .into_iter()
    .collect()
}

fn runtime(suite: &str, criterion: u8, secs: f64, budget: f64) -> TestReport {
    TestReport::new("runtime", secs, format!("{budget} s budget"), Gate::LessThan { max: budget })
        .labeled(suite, "runtime_seconds", Some(criterion))
}

pub struct ExtinctionExponential;
pub struct OuFluctuations;
pub struct MutationSupply;
pub struct PairClick;
pub struct RatchetPoisson;

impl Suite for ExtinctionExponential {
    fn name(&self) -> &'static str {
        "extinction-exponential"
    }
    fn summary(&self) -> &'static str {
        "extinction time from the center: mean and exponential shape"
    }
    fn criteria(&self) -> &'static [u8] {
        &[7]
    }
    fn run(&self, ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let name = self.name();
        let runs = ctx.shared_runs()?;
        let times: Vec<f64> = runs.uncensored().map(|r| r.t0).collect();
        let censored = runs.censored_count();
        let total = runs.records.len();
        let mut out = vec![
            TestReport::new("count", times.len() as f64, ">= 300", Gate::AtLeast { min: 300.0 })
                .labeled(name, "uncensored replicates", Some(7))
                .with_samples(total, censored),
            TestReport::new("count", censored as f64 / total as f64, "<= 5%", Gate::AtMost { max: 0.05 })
                .labeled(name, "censored fraction", Some(7))
                .with_samples(total, censored),
        ];
        let (mean, se) = mean_and_se(&times);
        out.push(
            TestReport::new(
                "mean",
                (mean - runs.oracle_mean).abs() / se,
                format!("oracle h_a = {:.6e}", runs.oracle_mean),
                Gate::AtMost { max: 3.0 },
            )
            .labeled(name, "|mean - h_a| / SE", Some(7))
            .with_samples(times.len(), censored)
            .with_detail("mean", mean)
            .with_detail("se", se),
        );
        let scaled: Vec<f64> = times.iter().map(|t| t / mean).collect();
        out.push(
            ks_test(&scaled, &RefCdf::UnitExponential)?
                .labeled(name, "KS of T0/mean vs Exp(1)", Some(7))
                .with_samples(times.len(), censored),
        );
        out.push(runtime(name, 7, runs.elapsed_secs, 1800.0));
        Ok(out)
    }
}

impl Suite for OuFluctuations {
    fn name(&self) -> &'static str {
        "ou-fluctuations"
    }
    fn summary(&self) -> &'static str {
        "rescaled stationary fluctuations: variance and lag-1 autocorrelation"
    }
    fn criteria(&self) -> &'static [u8] {
        &[8]
    }
    fn run(&self, ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let name = self.name();
        let started = Instant::now();
        let runs = ctx.shared_runs()?;
        let d = runs.params.derived();
        let rescaled: Vec<Vec<(f64, f64)>> = runs
            .uncensored()
            .filter_map(|r| r.path.as_ref())
            .map(|path| rescale_ou(&d, path, GRID_FRACTION))
            .collect();
        let segments: Vec<&[(f64, f64)]> = rescaled
            .iter()
            .map(|p| stationary_window(p, BURN_IN, TAIL))
            .filter(|s| s.len() > 1)
            .collect();
        let points: usize = segments.iter().map(|s| s.len()).sum();
        let (mean, var) = pooled_moments(segments.iter().copied());
        let rho1 = pooled_autocorr(&segments, 1.0)?;
        let target = (-1f64).exp();
        Ok(vec![
            TestReport::new("ou", var, "1/2", Gate::Within { lo: 0.4, hi: 0.6 })
                .labeled(name, "stationary variance", Some(8))
                .with_samples(points, runs.censored_count())
                .with_detail("mean", mean)
                .with_detail("segments", segments.len() as f64),
            TestReport::new(
                "ou",
                rho1,
                "e^-1",
                Gate::Within {
                    lo: target - 0.08,
                    hi: target + 0.08,
                },
            )
            .labeled(name, "lag-1 autocorrelation", Some(8))
            .with_samples(points, runs.censored_count()),
            runtime(name, 8, runs.elapsed_secs + started.elapsed().as_secs_f64(), 600.0),
        ])
    }
}

impl Suite for MutationSupply {
    fn name(&self) -> &'static str {
        "mutation-supply"
    }
    fn summary(&self) -> &'static str {
        "mutation deaths after the last visit to floor(2 eps a)"
    }
    fn criteria(&self) -> &'static [u8] {
        &[9]
    }
    fn run(&self, ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let name = self.name();
        let runs = ctx.shared_runs()?;
        let c = runs.params.derived().c;
        let counts: Vec<f64> = runs.uncensored().map(|r| r.mutation_deaths_after_l as f64).collect();
        let med = median(&counts);
        Ok(vec![
            TestReport::new("mutations", med, format!("5c = {}", 5.0 * c), Gate::AtLeast { min: 5.0 * c })
                .labeled(name, "median mutation deaths after L", Some(9))
                .with_samples(counts.len(), runs.censored_count())
                .with_detail("median_over_c", med / c),
            TestReport::new("count", counts.len() as f64, ">= 300", Gate::AtLeast { min: 300.0 })
                .labeled(name, "uncensored replicates", Some(9)),
        ])
    }
}

impl Suite for PairClick {
    fn name(&self) -> &'static str {
        "pair-click"
    }
    fn summary(&self) -> &'static str {
        "size of the second class when the fittest class dies"
    }
    fn criteria(&self) -> &'static [u8] {
        &[10]
    }
    fn run(&self, ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let name = self.name();
        let started = Instant::now();
        let p = p_sim();
        let d = p.derived();
        let records = run_replicates(ctx.stream_seed(tag::PAIR), PAIR_REPLICATES, ctx.workers, |spec| {
            simulate_pair(&p, d.a_floor, 0, None, &mut spec.rng())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let censored = records.iter().filter(|r| r.censored).count();
        let sizes: Vec<f64> = records
            .iter()
            .filter(|r| !r.censored)
            .map(|r| r.y1_at_t0 as f64 / d.c)
            .collect();
        let big = sizes.iter().filter(|&&x| x >= 2.0).count();
        let mut sorted = sizes.clone();
        sorted.sort_by(f64::total_cmp);
        let quantile = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
        Ok(vec![
            TestReport::new("pair", big as f64 / sizes.len() as f64, "-> 1", Gate::AtLeast { min: 0.9 })
                .labeled(name, "fraction Y1(T0) >= 2c", Some(10))
                .with_samples(records.len(), censored)
                .with_detail("q10_over_c", quantile(0.1))
                .with_detail("median_over_c", quantile(0.5))
                .with_detail("q90_over_c", quantile(0.9)),
            TestReport::new("count", sizes.len() as f64, ">= 200", Gate::AtLeast { min: 200.0 })
                .labeled(name, "uncensored replicates", Some(10)),
            runtime(name, 10, started.elapsed().as_secs_f64(), 1800.0),
        ])
    }
}

impl Suite for RatchetPoisson {
    fn name(&self) -> &'static str {
        "ratchet-poisson"
    }
    fn summary(&self) -> &'static str {
        "Poisson structure of ratchet clicks and the first-click law"
    }
    fn criteria(&self) -> &'static [u8] {
        &[11, 12]
    }
    fn run(&self, ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let name = self.name();
        let runs = ctx.ratchet_runs()?;
        let p = runs.params;
        let d = p.derived();
        let complete: Vec<&RatchetRecord> = runs
            .long
            .iter()
            .filter(|r| r.click_times.len() >= RATCHET_CLICKS)
            .collect();
        let censored = runs.long.len() - complete.len();
        let gaps: Vec<f64> = complete
            .iter()
            .flat_map(|r| r.click_times.windows(2).map(|w| w[1] - w[0]))
            .collect();
        let (mean_gap, _) = mean_and_se(&gaps);
        let oracle = mean_absorption_times(&ChainSpec::y0(&p))?[d.a_floor];
        let mut out = vec![
            TestReport::new("count", complete.len() as f64, ">= 50", Gate::AtLeast { min: 50.0 })
                .labeled(name, "runs with >= 10 inter-click gaps", Some(11))
                .with_samples(runs.long.len(), censored)
                .with_detail("N", p.n as f64)
                .with_detail("fell_back", if runs.fell_back { 1.0 } else { 0.0 }),
            ks_test(&gaps, &RefCdf::Exponential { mean: mean_gap })?
                .labeled(name, "KS inter-click vs Exp(sample mean)", Some(11))
                .with_samples(gaps.len(), censored),
        ];
        let window = 2.0 * mean_gap;
        let mut counts = Vec::new();
        for r in &complete {
            let t1 = r.click_times[0];
            let later: Vec<f64> = r.click_times[1..].iter().map(|t| t - t1).collect();
            let span = r.click_times.last().expect("clicks") - t1;
            counts.extend(window_counts(&later, window, span)?);
        }
        out.push(
            index_of_counts(&counts)?
                .labeled(name, "window-count dispersion index", Some(11))
                .with_detail("window", window),
        );
        out.push(
            TestReport::new(
                "mean",
                (mean_gap / oracle - 1.0).abs(),
                format!("oracle h_a = {oracle:.6e}"),
                Gate::AtMost { max: 0.15 },
            )
            .labeled(name, "|mean gap / h_a - 1|", Some(11))
            .with_samples(gaps.len(), censored)
            .with_detail("mean_gap", mean_gap),
        );
        out.push(runtime("ratchet-poisson", 11, runs.elapsed_secs, ctx.ratchet_budget.as_secs_f64()));

        let first = runs.first_clicks();
        let top: Vec<f64> = runs.top.iter().filter(|r| !r.censored).map(|r| r.t0).collect();
        let top_censored = runs.top.len() - top.len();
        out.push(
            ks_two_sample(&first, &top)?
                .labeled(name, "KS first click vs Y0 extinction from N", Some(12))
                .with_samples(first.len() + top.len(), top_censored),
        );
        out.push(
            TestReport::new("count", first.len().min(top.len()) as f64, ">= 200 each", Gate::AtLeast { min: 200.0 })
                .labeled(name, "samples per side", Some(12)),
        );
        Ok(out)
    }
}
