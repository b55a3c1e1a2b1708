// SPDX-License-Identifier: Apache-2.0

use ratchet_core::oracle::{self, ChainSpec};
use ratchet_core::potential::{self, build_potential};
use ratchet_core::sim::{find_simulator, run_replicates, RngSpec, SimOptions, SimRecord};
use ratchet_core::verify::{find_suite, p_tiny, run_named, VerifyContext};
use ratchet_core::ModelParams;

#[test]
fn potential_sums_match_linear_solve() {
    for p in [p_tiny(), ModelParams::from_rho(300, 0.05, 0.6).unwrap()] {
        let table = build_potential(&p).unwrap();
        let h = oracle::mean_absorption_times(&ChainSpec::y0(&p)).unwrap();
        for start in [1, p.n / 3, p.n] {
            let sum = potential::mean_extinction_time(&table, start).unwrap();
            assert!((sum - h[start]).abs() <= 1e-10 * h[start], "{start}: {sum} vs {}", h[start]);
        }
    }
}

#[test]
fn qsd_decay_rate_matches_mean_time() {
    let p = ModelParams::from_rho(300, 0.05, 0.6).unwrap();
    let chain = ChainSpec::y0(&p);
    let qsd = oracle::quasi_stationary(&chain).unwrap();
    let h = oracle::mean_absorption_times(&chain).unwrap();
    let from_alpha: f64 = (1..=p.n).map(|k| qsd.weight(k) * h[k]).sum();
    assert!((qsd.theta * from_alpha - 1.0).abs() < 1e-9);
}

#[test]
fn registered_simulators_are_reproducible() {
    let p = ModelParams::from_rho(120, 0.05, 0.5).unwrap();
    let opts = SimOptions {
        clicks: 2,
        duration: Some(200.0),
        ..SimOptions::default()
    };
    for name in ["y0", "ystar", "pair", "ratchet"] {
        let engine = find_simulator(name).unwrap();
        let run = |workers| {
            run_replicates(5, 4, workers, |spec: RngSpec| engine.run(&p, &opts, spec).unwrap())
                .iter()
                .enumerate()
                .flat_map(|(i, r)| r.csv_rows(i))
                .collect::<Vec<_>>()
        };
        let one = run(1);
        assert!(!one.is_empty(), "{name}");
        assert_eq!(one, run(3), "{name}");
    }
}

#[test]
fn mean_extinction_time_agrees_with_simulation() {
    let p = p_tiny();
    let h = oracle::mean_absorption_times(&ChainSpec::y0(&p)).unwrap();
    let engine = find_simulator("y0").unwrap();
    let opts = SimOptions {
        init: Some(10),
        ..SimOptions::default()
    };
    let times: Vec<f64> = run_replicates(9, 20_000, 1, |spec| match engine.run(&p, &opts, spec).unwrap() {
        SimRecord::Extinction(r) => r.t0,
        _ => unreachable!(),
    });
    let (mean, se) = ratchet_core::stats::mean_and_se(&times);
    assert!((mean - h[10]).abs() < 4.0 * se, "{mean} +- {se} vs {}", h[10]);
}

#[test]
fn analytic_suite_runs_by_name() {
    let ctx = VerifyContext::new(1, 1);
    let reports = run_named("hitting-times", &ctx).unwrap();
    assert!(reports.iter().all(|r| r.passed()), "{reports:#?}");
    assert!(find_suite("all").is_err());
}
