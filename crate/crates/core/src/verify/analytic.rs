// SPDX-License-Identifier: Apache-2.0

//! Suites that need no simulation: potential shape, hitting-time sums and
//! the quasi-stationary profile.

use std::f64::consts::PI;
use std::time::Instant;

use super::{p_fig1, p_sim, p_tiny, runtime_report, Suite, VerifyContext};
use crate::error::Result;
use crate::model::ModelParams;
use crate::numeric::rel_diff;
use crate::oracle::{
    exit_probabilities, first_passage_times_to, mean_absorption_times, naive, quasi_stationary,
    tv_distance, ChainSpec, QsdResult,
};
use crate::potential::{
    build_potential, dawson, e_n, excursion_bound, exit_prob_down, h_family, hit_prob_asymptotic,
    mean_extinction_time, mean_reach_time_soft, mean_time_top_to_center, pi_star, PotentialTable,
};
use crate::sim::{run_replicates, Y0Sampler};
use crate::stats::{discretized_normal, Gate, TestReport};

pub struct PotentialIdentity;
pub struct QuadraticWell;
pub struct HittingTimes;
pub struct QsdGaussian;

impl Suite for PotentialIdentity {
    fn name(&self) -> &'static str {
        "potential-identity"
    }
    fn summary(&self) -> &'static str {
        "U(n) against -2u H(n/a) on [1, 0.9N]"
    }
    fn criteria(&self) -> &'static [u8] {
        &[1]
    }
    fn run(&self, _ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let started = Instant::now();
        let name = self.name();
        let p = p_fig1();
        let t = build_potential(&p)?;
        let d = t.derived;
        let f0 = ((0.5 + p.m) / (0.5 + p.s)).ln();
        let mut worst = (0.0f64, 0usize);
        let mut worst_trap = (0.0f64, 0usize);
        for n in 1..=(9 * p.n / 10) {
            let u = t.potential(n);
            let target = -2.0 * d.u * h_family(&p, n as f64 / d.a, 0)?;
            let scale = u.abs().max(1.0);
            let res = (u - target).abs() / scale;
            if res > worst.0 {
                worst = (res, n);
            }
            // Endpoint terms of the trapezoid rule relating the sum to the integral.
            let f_n = (p.mu(n) / p.lambda(n)).ln();
            let trap = (u - 0.5 * (f_n - f0) - target).abs() / scale;
            if trap > worst_trap.0 {
                worst_trap = (trap, n);
            }
        }
        Ok(vec![
            TestReport::new("identity", worst.0, "0 (exact identity)", Gate::AtMost { max: 1e-6 })
                .labeled(name, "max_scaled_residual", Some(1))
                .with_samples(9 * p.n / 10, 0)
                .with_detail("argmax_n", worst.1 as f64),
            TestReport::new("identity", worst_trap.0, "0", Gate::ReportOnly)
                .labeled(name, "max_residual_with_endpoint_terms", Some(1))
                .with_detail("argmax_n", worst_trap.1 as f64),
            runtime_report(name, 1, started, 60.0),
        ])
    }
}

/// `U(floor(a + K sigma)) - U(floor(a))` for `K = -1, +1`.
fn well_depths(p: &ModelParams) -> Result<[f64; 2]> {
    let t = build_potential(p)?;
    let d = t.derived;
    let center = t.potential(d.a_floor);
    Ok([-1.0, 1.0].map(|k: f64| t.potential((d.a + k * d.sigma).floor() as usize) - center))
}

impl Suite for QuadraticWell {
    fn name(&self) -> &'static str {
        "quadratic-well"
    }
    fn summary(&self) -> &'static str {
        "one-sigma well depth and its convergence under N scaling"
    }
    fn criteria(&self) -> &'static [u8] {
        &[2]
    }
    fn run(&self, _ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let started = Instant::now();
        let name = self.name();
        let p = p_fig1();
        let p4 = ModelParams::new(4 * p.n, p.m, p.s)?;
        let base = well_depths(&p)?;
        let scaled = well_depths(&p4)?;
        let mut out = Vec::new();
        for (i, label) in ["minus", "plus"].iter().enumerate() {
            out.push(
                TestReport::new("well", base[i], "K^2 = 1", Gate::Within { lo: 0.9, hi: 1.1 })
                    .labeled(name, format!("depth_{label}_sigma"), Some(2)),
            );
            let (dev, dev4) = ((base[i] - 1.0).abs(), (scaled[i] - 1.0).abs());
            out.push(
                TestReport::new("well", dev4, format!("|deviation| at N = {}", p.n), Gate::LessThan { max: dev })
                    .labeled(name, format!("deviation_{label}_sigma_at_4N"), Some(2))
                    .with_detail("depth_at_4N", scaled[i])
                    .with_detail("u_at_4N", p4.derived().u),
            );
        }
        out.push(runtime_report(name, 2, started, 120.0));
        Ok(out)
    }
}

/// Maximum pairwise relative difference of three evaluations.
fn triangle(values: [f64; 3]) -> f64 {
    let [a, b, c] = values;
    rel_diff(a, b).max(rel_diff(a, c)).max(rel_diff(b, c))
}

fn triangle_reports(suite: &str, tag: &str, p: &ModelParams) -> Result<Vec<TestReport>> {
    let t = build_potential(p)?;
    let a = t.derived.a_floor;
    let n = p.n;
    let y0 = ChainSpec::y0(p);
    let ystar = ChainSpec::y_star(p);
    let start = (a / 2).max(1);
    let rows: [(&str, [f64; 3]); 4] = [
        (
            "E_N[T_a]",
            [
                mean_time_top_to_center(&t),
                first_passage_times_to(&y0, a)?[n],
                naive::top_to_center(p),
            ],
        ),
        (
            "E_0[T*_a]",
            [
                mean_reach_time_soft(&t),
                first_passage_times_to(&ystar, a)?[0],
                naive::reach_time_soft(p),
            ],
        ),
        (
            "E_a[T_0]",
            [
                mean_extinction_time(&t, a)?,
                mean_absorption_times(&y0)?[a],
                naive::absorption_time(p, a),
            ],
        ),
        (
            "P(T_0 < T_a) from a/2",
            [
                exit_prob_down(&t, start, a)?,
                exit_probabilities(&y0, a)?[start],
                naive::exit_prob(p, start, a),
            ],
        ),
    ];
    Ok(rows
        .into_iter()
        .map(|(label, v)| {
            TestReport::new("triangle", triangle(v), "sum = solve = naive", Gate::AtMost { max: 1e-8 })
                .labeled(suite, format!("{label} at {tag}"), Some(3))
                .with_detail("potential_sum", v[0])
                .with_detail("linear_solve", v[1])
                .with_detail("naive_recursion", v[2])
        })
        .collect())
}

/// `h_{floor(a)} / e_N` along `u = 4, 8, 12` at `m = 0.025`, `rho = 0.75`.
pub(crate) fn extinction_ratio_trend() -> Result<Vec<(f64, f64)>> {
    [2560usize, 5120, 7680]
        .iter()
        .map(|&n| {
            let p = ModelParams::from_rho(n, 0.025, 0.75)?;
            let h = mean_absorption_times(&ChainSpec::y0(&p))?;
            let d = p.derived();
            Ok((d.u, h[d.a_floor] / e_n(&p).linear))
        })
        .collect()
}

impl Suite for HittingTimes {
    fn name(&self) -> &'static str {
        "hitting-times"
    }
    fn summary(&self) -> &'static str {
        "closed-form sums, linear solves and naive recursions; asymptotic hitting laws"
    }
    fn criteria(&self) -> &'static [u8] {
        &[3, 4]
    }
    fn run(&self, ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let name = self.name();
        let mut out = Vec::new();

        let started = Instant::now();
        out.extend(triangle_reports(name, "P_tiny", &p_tiny())?);
        out.extend(triangle_reports(name, "P_sim", &p_sim())?);
        out.push(runtime_report(name, 3, started, 10.0));

        let started = Instant::now();
        let trend = extinction_ratio_trend()?;
        let steps_toward_one = trend
            .windows(2)
            .filter(|w| (w[1].1 - 1.0).abs() < (w[0].1 - 1.0).abs())
            .count();
        let mut monotone = TestReport::new(
            "trend",
            steps_toward_one as f64,
            "2 of 2 steps toward 1",
            Gate::AtLeast { min: 2.0 },
        )
        .labeled(name, "h_a/e_N monotone toward 1", Some(4));
        for (u, r) in &trend {
            monotone = monotone.with_detail(format!("ratio_u{u}"), *r);
        }
        out.push(monotone);
        let last = trend.last().expect("three points").1;
        out.push(
            TestReport::new("trend", (last - 1.0).abs(), "0", Gate::ReportOnly)
                .labeled(name, "final |h_a/e_N - 1| at u = 12", Some(4)),
        );
        out.push(runtime_report(name, 4, started, 300.0));

        out.extend(asymptotic_checks(name, ctx)?);
        Ok(out)
    }
}

/// Checks on the asymptotic hitting laws of the potential module.
fn asymptotic_checks(suite: &str, ctx: &VerifyContext) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let p = p_fig1();
    let t = build_potential(&p)?;
    let d = t.derived;
    let within_25 = Gate::Within { lo: 0.75, hi: 1.25 };

    let disp = d.sigma / 20.0;
    let exact = exit_prob_down(&t, (d.a - disp).floor() as usize, d.a_floor)?;
    let asym = hit_prob_asymptotic(&p, disp)?.linear;
    out.push(
        TestReport::new("asymptotic", exact / asym, "1", within_25)
            .labeled(suite, "exit prob / asymptotic at sigma/20", None)
            .with_detail("exact", exact)
            .with_detail("asymptotic", asym),
    );

    let k = 1.0f64;
    let exact = exit_prob_down(&t, (d.a - k * d.sigma).floor() as usize, d.a_floor)?;
    let denom = d.c * 2.0 * PI.sqrt() * (k * k).exp() * dawson(k);
    out.push(
        TestReport::new("asymptotic", exact * e_n(&p).linear / denom, "1", within_25)
            .labeled(suite, "excursion count identity at K = 1", None),
    );

    let c_log_a = d.c * d.a.ln();
    let bound = 1f64.max(4.0 * d.rho) * d.rho;
    out.push(
        TestReport::new("asymptotic", mean_time_top_to_center(&t) / c_log_a, format!("(1 v 4 rho) rho = {bound:.4}"), Gate::AtMost { max: bound })
            .labeled(suite, "E_N[T_a] / (c log a)", None),
    );
    out.push(
        TestReport::new("asymptotic", mean_reach_time_soft(&t) / c_log_a, "O(1)", Gate::ReportOnly)
            .labeled(suite, "E_0[T*_a] / (c log a)", None),
    );

    // Deep excursions at P_sim: from a - sigma, reach a - 4 sigma (floored
    // at 0) before returning to a.
    let p = p_sim();
    let d = p.derived();
    let (depth, mult) = (d.sigma, 4.0);
    let bound = excursion_bound(&p, depth, mult)?;
    let start = (d.a - depth).floor() as usize;
    let lower = (d.a - mult * depth).floor().max(0.0) as usize;
    let sampler = Y0Sampler::new(&p);
    let trials = 10_000;
    let hits = run_replicates(ctx.stream_seed(1), trials, ctx.workers, |spec| {
        sampler.hits_lower_first(start, lower, d.a_floor, &mut spec.rng())
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?
    .into_iter()
    .filter(|&b| b)
    .count();
    out.push(
        TestReport::new("asymptotic", hits as f64 / trials as f64, format!("bound {bound:.4e}"), Gate::AtMost { max: bound })
            .labeled(suite, "deep excursion frequency", None)
            .with_samples(trials, 0)
            .with_detail("lower_level", lower as f64),
    );
    Ok(out)
}

/// Rescaled mean, variance and mass above `floor(a/2)` of a distribution on
/// states `1..=N`.
fn rescaled_moments(alpha: &[f64], d: &crate::model::DerivedParams) -> (f64, f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    let mut upper = 0.0;
    for (i, &w) in alpha.iter().enumerate() {
        let k = i + 1;
        let x = (k as f64 - d.a) / d.sigma;
        mean += w * x;
        second += w * x * x;
        if k >= d.a_floor / 2 {
            upper += w;
        }
    }
    (mean, second - mean * mean, upper)
}

fn qsd_vs_pi(q: &QsdResult, table: &PotentialTable) -> Result<f64> {
    let pi = pi_star(table);
    let tail: f64 = pi[1..].iter().sum();
    let restricted: Vec<f64> = pi[1..].iter().map(|v| v / tail).collect();
    tv_distance(&q.alpha, &restricted)
}

/// `theta` recovered from the eigen-equation at the mode of `alpha`.
fn local_theta(chain: &ChainSpec, q: &QsdResult) -> f64 {
    let n = chain.top();
    let (i, _) = q
        .alpha
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty");
    let k = i + 1;
    let mut flow = -(chain.up[k] + chain.down[k]) * q.weight(k);
    if k > 1 {
        flow += chain.up[k - 1] * q.weight(k - 1);
    }
    if k < n {
        flow += chain.down[k + 1] * q.weight(k + 1);
    }
    -flow / q.weight(k)
}

/// Near-center and full-range distance of `pi*` from `N(a, sigma^2/2)`.
fn pi_star_profile(p: &ModelParams) -> Result<(f64, f64, f64)> {
    let t = build_potential(p)?;
    let d = t.derived;
    let pi = pi_star(&t);
    let var = d.sigma * d.sigma / 2.0;
    let peak = pi[d.a_floor] * d.sigma * PI.sqrt();
    let mut near = 0.0;
    let mut full = 0.0;
    let mut inside = 0.0;
    for (k, &w) in pi.iter().enumerate() {
        let q = discretized_normal(k as i64, d.a, var);
        full += (w - q).abs();
        inside += q;
        if (k as f64 - d.a).abs() <= d.sigma {
            near += (w - q).abs();
        }
    }
    full += (1.0 - inside).max(0.0);
    Ok((peak, 0.5 * near, 0.5 * full))
}

impl Suite for QsdGaussian {
    fn name(&self) -> &'static str {
        "qsd-gaussian"
    }
    fn summary(&self) -> &'static str {
        "quasi-stationary distribution and equilibrium profile against N(a, sigma^2/2)"
    }
    fn criteria(&self) -> &'static [u8] {
        &[5, 6]
    }
    fn run(&self, _ctx: &VerifyContext) -> Result<Vec<TestReport>> {
        let name = self.name();
        let mut out = Vec::new();

        let started = Instant::now();
        let p = p_sim();
        let chain = ChainSpec::y0(&p);
        let q = quasi_stationary(&chain)?;
        let h = mean_absorption_times(&chain)?;
        let table = build_potential(&p)?;
        let d = table.derived;
        let theta_local = local_theta(&chain, &q);
        out.push(
            TestReport::new("qsd", rel_diff(q.theta, theta_local), "0", Gate::AtMost { max: 1e-8 })
                .labeled(name, "flux theta vs eigen-equation theta", Some(5))
                .with_detail("theta", q.theta)
                .with_detail("iterations", q.iterations as f64),
        );
        let mean_time: f64 = (1..=p.n).map(|k| q.weight(k) * h[k]).sum();
        out.push(
            TestReport::new("qsd", (q.theta * mean_time - 1.0).abs(), "0", Gate::AtMost { max: 1e-6 })
                .labeled(name, "|theta * E_alpha[T_0] - 1|", Some(5)),
        );
        out.push(
            TestReport::new("qsd", qsd_vs_pi(&q, &table)?, "0", Gate::AtMost { max: 0.05 })
                .labeled(name, "d_TV(alpha, pi* on 1..N)", Some(5)),
        );
        let (mean, var, upper) = rescaled_moments(&q.alpha, &d);
        out.push(
            TestReport::new("qsd", var, "1/2", Gate::Within { lo: 0.4, hi: 0.6 })
                .labeled(name, "rescaled alpha variance", Some(5)),
        );
        out.push(
            TestReport::new("qsd", mean, "0 +- 0.1", Gate::ReportOnly)
                .labeled(name, "rescaled alpha mean", Some(5)),
        );
        out.push(
            TestReport::new("qsd", upper, "1", Gate::AtLeast { min: 0.99 })
                .labeled(name, "alpha mass above a/2", Some(5)),
        );
        for scale in [4usize, 16] {
            let pk = ModelParams::new(scale * p.n, p.m, p.s)?;
            let chain_k = ChainSpec::y0(&pk);
            let qk = quasi_stationary(&chain_k)?;
            let tk = build_potential(&pk)?;
            let (_, var_k, upper_k) = rescaled_moments(&qk.alpha, &tk.derived);
            out.push(
                TestReport::new("qsd", qsd_vs_pi(&qk, &tk)?, "0", Gate::ReportOnly)
                    .labeled(name, format!("trend {scale}N: d_TV(alpha, pi*)"), Some(5))
                    .with_detail("u", tk.derived.u)
                    .with_detail("variance", var_k)
                    .with_detail("mass_above_a_half", upper_k),
            );
        }
        out.push(runtime_report(name, 5, started, 120.0));

        let started = Instant::now();
        let p = p_fig1();
        let (peak, near, full) = pi_star_profile(&p)?;
        out.push(
            TestReport::new("pi-star", peak, "1", Gate::Within { lo: 0.9, hi: 1.1 })
                .labeled(name, "pi*(a) sigma sqrt(pi)", Some(6)),
        );
        out.push(
            TestReport::new("pi-star", near, "0", Gate::AtMost { max: 0.02 })
                .labeled(name, "d_TV near center |n-a| <= sigma", Some(6)),
        );
        out.push(
            TestReport::new("pi-star", full, "0", Gate::ReportOnly)
                .labeled(name, "d_TV over all states", Some(6)),
        );
        let p4 = ModelParams::new(4 * p.n, p.m, p.s)?;
        let (peak4, near4, full4) = pi_star_profile(&p4)?;
        out.push(
            TestReport::new("pi-star", near4, "0", Gate::ReportOnly)
                .labeled(name, "trend 4N: d_TV near center", Some(6))
                .with_detail("u", p4.derived().u)
                .with_detail("peak", peak4)
                .with_detail("full_range", full4),
        );
        out.push(runtime_report(name, 6, started, 60.0));
        Ok(out)
    }
}
