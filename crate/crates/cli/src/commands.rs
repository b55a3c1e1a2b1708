// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use serde_json::{json, Value};

use ratchet_core::oracle::{self, ChainSpec};
use ratchet_core::potential::{self, build_potential};
use ratchet_core::sim::{find_simulator, run_replicates, simulators, SimOptions, SimRecord, Thinning};
use ratchet_core::stats::{summary_table, TestReport, Verdict};
use ratchet_core::verify::{find_suite, run_named, suite_names, VerifyContext};
use ratchet_core::{derive_params, ModelParams};

use crate::config::{Format, RunConfig, DEFAULT_CLICKS, DEFAULT_REPLICATES};
use crate::output::{cell, output_dir, Emitter, Metadata};
use crate::UsageError;

/// Whether every gated check passed.
pub struct Outcome {
    pub passed: bool,
}

impl Outcome {
    fn ok() -> Self {
        Self { passed: true }
    }
}

fn emitter(argv: &[String], cfg: &RunConfig, p: ModelParams, command: &str) -> Emitter {
    let dir = output_dir(cfg, command);
    Emitter::new(dir, cfg.format(), Metadata::new(argv, p, cfg))
}

/// Compact decimal rendering that hides last-digit rounding noise.
pub fn number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    if x.abs() < 1e-4 || x.abs() >= 1e15 {
        return format!("{x:.9e}");
    }
    let digits = (9 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn derive(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let p = cfg.params()?;
    let d = derive_params(&p)?;
    for w in d.regime_warnings() {
        eprintln!("warning: {w}");
    }
    match cfg.format() {
        Format::Json => {
            let doc = json!({ "params": p, "derived": d });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Csv => {
            let rows: [(&str, f64); 10] = [
                ("N", p.n as f64),
                ("m", p.m),
                ("s", p.s),
                ("rho", d.rho),
                ("a", d.a),
                ("a_floor", d.a_floor as f64),
                ("c", d.c),
                ("u", d.u),
                ("sigma", d.sigma),
                ("a/c", d.a / d.c),
            ];
            for (k, v) in rows {
                println!("{k:<8} {}", number(v));
            }
        }
    }
    Ok(Outcome::ok())
}

pub fn analytics(argv: &[String], cfg: &RunConfig, dump_potential: bool) -> anyhow::Result<Outcome> {
    let p = cfg.params()?;
    let d = derive_params(&p)?;
    for w in d.regime_warnings() {
        eprintln!("warning: {w}");
    }
    let table = build_potential(&p)?;
    let e_n = potential::e_n(&p);
    let v_n = potential::v_n(&p);
    let pi = potential::pi_star(&table);
    let (pi_mean, pi_var) = {
        let m1: f64 = pi.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
        let m2: f64 = pi.iter().enumerate().map(|(n, w)| (n as f64).powi(2) * w).sum();
        (m1, m2 - m1 * m1)
    };
    let pi_mode = pi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(n, _)| n);
    let half = d.a_floor / 2;
    let rows: Vec<(String, Value)> = vec![
        ("eta".into(), json!(potential::eta(&p))),
        ("v_n".into(), json!(v_n.linear)),
        ("log_v_n".into(), json!(v_n.log)),
        ("e_n".into(), finite_or_null(e_n.linear)),
        ("log_e_n".into(), json!(e_n.log)),
        ("potential_argmin".into(), json!(table.argmin())),
        ("exit_prob_zero_before_a_from_half_a".into(), json!(potential::exit_prob_down(&table, half, d.a_floor)?)),
        ("mean_time_n_to_a".into(), json!(potential::mean_time_top_to_center(&table))),
        ("mean_time_a_to_0".into(), json!(potential::mean_extinction_time(&table, d.a_floor)?)),
        ("mean_time_0_to_a_reflected".into(), json!(potential::mean_reach_time_soft(&table))),
        ("pi_star_mode".into(), json!(pi_mode)),
        ("pi_star_mean".into(), json!(pi_mean)),
        ("pi_star_variance".into(), json!(pi_var)),
        ("pi_star_at_a_floor".into(), json!(pi[d.a_floor])),
    ];
    let out = emitter(argv, cfg, p, "analytics");
    out.table("analytics", &rows)?;
    if dump_potential {
        let mut body = Vec::new();
        table.write_csv(&mut body)?;
        out.csv("potential", &String::from_utf8(body)?)?;
    }
    for (k, v) in &rows {
        println!("{k:<38} {v}");
    }
    println!("output: {}", out.dir().display());
    Ok(Outcome::ok())
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn oracle(argv: &[String], cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let p = cfg.params()?;
    let chain = ChainSpec::y0(&p);
    let h = oracle::mean_absorption_times(&chain)?;
    let qsd = oracle::quasi_stationary(&chain)?;
    let out = emitter(argv, cfg, p, "oracle");
    match out.format() {
        Format::Csv => {
            let mut body = Vec::new();
            oracle::write_csv(&mut body, &h, &qsd)?;
            out.csv("oracle", &String::from_utf8(body)?)?;
        }
        Format::Json => {
            let alpha: Vec<f64> = (0..=p.n).map(|k| qsd.weight(k)).collect();
            out.json("oracle", "states", &json!({ "h": h, "alpha": alpha }))?;
        }
    }
    let a = p.derived().a_floor;
    let rows: Vec<(String, Value)> = vec![
        ("theta".into(), json!(qsd.theta)),
        ("mean_time_to_extinction_from_qsd".into(), json!(1.0 / qsd.theta)),
        ("h_a_floor".into(), json!(h[a])),
        ("h_n".into(), json!(h[p.n])),
        ("iterations".into(), json!(qsd.iterations)),
    ];
    out.table("oracle-summary", &rows)?;
    for (k, v) in &rows {
        println!("{k:<34} {v}");
    }
    println!("output: {}", out.dir().display());
    Ok(Outcome::ok())
}

pub fn sim(argv: &[String], cfg: &RunConfig, name: &str) -> anyhow::Result<Outcome> {
    let engine = find_simulator(name)?;
    let p = cfg.params()?;
    let opts = SimOptions {
        init: cfg.init,
        init_second: cfg.init_second.unwrap_or(0),
        epsilon: cfg.epsilon.unwrap_or(SimOptions::default().epsilon),
        horizon: cfg.horizon,
        duration: cfg.duration,
        clicks: cfg.clicks.unwrap_or(DEFAULT_CLICKS),
        thinning: cfg.thin.map_or(Thinning::None, Thinning::Grid),
    };
    if let Some(n0) = opts.init.filter(|&n0| n0 > p.n) {
        return Err(UsageError(format!("--init {n0} exceeds N = {}", p.n)).into());
    }
    let replicates = cfg.replicates.unwrap_or(DEFAULT_REPLICATES);
    let records = run_replicates(cfg.seed(), replicates, cfg.workers(), |spec| engine.run(&p, &opts, spec))
        .into_iter()
        .collect::<ratchet_core::Result<Vec<SimRecord>>>()?;
    let out = emitter(argv, cfg, p, "sim");
    match out.format() {
        Format::Csv => {
            let mut body = format!("replicate,{}\n", engine.csv_header());
            for (i, r) in records.iter().enumerate() {
                for row in r.csv_rows(i) {
                    body.push_str(&row);
                    body.push('\n');
                }
            }
            out.csv("records", &body)?;
        }
        Format::Json => {
            out.json("records", "records", &records)?;
        }
    }
    if out.format() == Format::Csv {
        for (i, r) in records.iter().enumerate() {
            if let Some(path) = r.path_csv() {
                out.csv(&format!("paths/replicate-{i:04}"), &path)?;
            }
        }
    }
    let censored = records
        .iter()
        .filter(|r| match r {
            SimRecord::Extinction(e) => e.censored,
            SimRecord::Pair(e) => e.censored,
            SimRecord::Ratchet(e) => e.censored,
            SimRecord::Occupation(_) => false,
        })
        .count();
    println!("{replicates} replicates of {} ({censored} censored)", engine.name());
    println!("output: {}", out.dir().display());
    Ok(Outcome::ok())
}

pub fn sim_names() -> String {
    simulators().iter().map(|s| format!("{} ({})", s.name(), s.summary())).collect::<Vec<_>>().join(", ")
}

pub fn verify(argv: &[String], cfg: &RunConfig, suite: &str) -> anyhow::Result<Outcome> {
    if suite != "all" {
        find_suite(suite).map_err(|_| {
            UsageError(format!("unknown suite `{suite}`; valid suites: {}", suite_names().join(", ")))
        })?;
    }
    let ctx = VerifyContext::new(cfg.seed(), cfg.workers());
    let reports = run_named(suite, &ctx)?;
    let p = cfg.params().unwrap_or_else(|_| ratchet_core::verify::p_sim());
    let out = emitter(argv, cfg, p, "verify");
    match out.format() {
        Format::Csv => out.csv("reports", &reports_csv(&reports))?,
        Format::Json => out.json("reports", "reports", &reports)?,
    };
    print!("{}", summary_table(&reports));
    println!("output: {}", out.dir().display());
    Ok(Outcome {
        passed: reports.iter().all(|r| r.verdict != Verdict::Fail),
    })
}

fn reports_csv(reports: &[TestReport]) -> String {
    let mut body =
        String::from("suite,criterion,check,statistic,p_value,gate,verdict,n_samples,censored_count,reference\n");
    for r in reports {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{},{}",
            r.suite,
            r.criterion.map_or(String::new(), |c| c.to_string()),
            cell(&r.check),
            r.statistic,
            r.p_value.map_or(String::new(), |p| p.to_string()),
            cell(&r.gate.to_string()),
            r.verdict,
            r.n_samples,
            r.censored_count,
            cell(&r.reference),
        );
    }
    body
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_drop_rounding_noise() {
        assert_eq!(number(2124.9999999999995), "2125");
        assert_eq!(number(32000.0), "32000");
        assert_eq!(number(10.240000000000002), "10.24");
        assert_eq!(number(0.68), "0.68");
        assert_eq!(number(1e-6), "1.000000000e-6");
    }
}
