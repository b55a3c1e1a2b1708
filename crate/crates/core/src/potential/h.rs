// SPDX-License-Identifier: Apache-2.0

//! The rescaled potential `H((m, rho), y)`, its first three derivatives and
//! the quantities built on its maximum: `eta`, `v_N`, `e_N`, and the
//! escape-probability asymptotics.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numeric::LogValue;

/// Above this value of `(1 - rho) y` the series converges too slowly and the
/// closed-form sum is used instead.
const SERIES_LIMIT: f64 = 0.999;

const SERIES_TOL: f64 = 1e-14;

/// `H^(order)((m, rho), y)` for `order` in `0..=3`.
///
/// Order 0 is summed from its power series on `(1 - rho) y <= 0.999`, with
/// an explicit geometric tail bound as the stopping rule; closer to the
/// singular endpoint the series is summed in closed form. Orders 1 to 3 are
/// the closed-form derivatives and require `(1 - rho) y <= 1 - 1e-9`.
pub fn h_family(p: &ModelParams, y: f64, order: u8) -> Result<f64> {
    let rho = p.rho();
    let x = (1.0 - rho) * y;
    if !(y >= 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("H needs y >= 0, got {y}")));
    }
    if order == 0 {
        if x > 1.0 {
            return Err(Error::Domain(format!(
                "H needs (1-rho) y <= 1, got {x}"
            )));
        }
        return Ok(if x <= SERIES_LIMIT {
            h_series(p.m, rho, y)
        } else {
            h_closed(p.m, rho, y)
        });
    }
    if x > 1.0 - 1e-9 {
        return Err(Error::Domain(format!(
            "H derivatives need (1-rho) y <= 1 - 1e-9, got {x}"
        )));
    }
    let m = p.m;
    match order {
        1 => {
            let arg = (2.0 * m / rho) * (1.0 - rho) * (y - 1.0)
                / ((1.0 + 2.0 * m / rho) * (1.0 - x));
            Ok(-arg.ln_1p() / (2.0 * m * (1.0 - rho)))
        }
        2 => Ok((1.0 / (1.0 + 2.0 * m - x) - 1.0 / (1.0 - x)) / (2.0 * m)),
        3 => {
            let d1 = 1.0 + 2.0 * m - x;
            let d2 = 1.0 - x;
            Ok(-2.0 * (1.0 - rho) * (1.0 + m - x) / (d1 * d1 * d2 * d2))
        }
        _ => Err(Error::Domain(format!("derivative order {order} > 3"))),
    }
}

fn h_series(m: f64, rho: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let x = (1.0 - rho) * y;
    let prefactor = y / (2.0 * m);
    let head = ((2.0 * m).ln_1p() - (2.0 * m / rho).ln_1p()) / (1.0 - rho);
    let log_decay = (2.0 * m).ln_1p();
    let mut sum = 0.0;
    let mut x_pow = 1.0;
    let mut l = 1u64;
    loop {
        let lf = l as f64;
        x_pow *= x;
        let weight = -(-lf * log_decay).exp_m1();
        sum += weight * x_pow / ((1.0 - rho) * lf * (lf + 1.0));
        // Remaining terms are bounded by sum_{k>l} x^k / ((1-rho) k (k+1)).
        let tail = x_pow * x / ((1.0 - rho) * (lf + 1.0) * (lf + 2.0) * (1.0 - x));
        if prefactor * tail < SERIES_TOL * (1.0 + (prefactor * (head + sum)).abs()) || x_pow == 0.0 {
            break;
        }
        l += 1;
    }
    -prefactor * (head + sum)
}

/// `sum_{l>=1} z^l / (l (l + 1)) = 1 + (1 - z)/z * log(1 - z)`.
fn series_kernel(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else if z == 1.0 {
        1.0
    } else {
        1.0 + (1.0 - z) / z * (-z).ln_1p()
    }
}

/// Closed-form sum of the order-0 series, valid on the closed interval.
fn h_closed(m: f64, rho: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let x = (1.0 - rho) * y;
    let head = (2.0 * m).ln_1p() - (2.0 * m / rho).ln_1p();
    let tail = series_kernel(x) - series_kernel(x / (1.0 + 2.0 * m));
    -(y / (2.0 * m)) * (head + tail) / (1.0 - rho)
}

/// Depth parameter `eta(m, rho) = H(1)`.
pub fn eta(p: &ModelParams) -> f64 {
    let rho = p.rho();
    if 1.0 - rho <= SERIES_LIMIT {
        h_series(p.m, rho, 1.0)
    } else {
        h_closed(p.m, rho, 1.0)
    }
}

/// `v_N = c exp(2 u eta)`, the asymptotic number of returns to the center.
pub fn v_n(p: &ModelParams) -> LogValue {
    let d = p.derived();
    LogValue::from_log(d.c.ln() + 2.0 * d.u * eta(p))
}

/// `e_N = c sqrt(pi / u) exp(2 u eta)`, the asymptotic mean click time.
pub fn e_n(p: &ModelParams) -> LogValue {
    let d = p.derived();
    LogValue::from_log(
        d.c.ln() + 0.5 * (std::f64::consts::PI / d.u).ln() + 2.0 * d.u * eta(p),
    )
}

/// Asymptotic probability of reaching 0 before the center from
/// `a - displacement`: `(2 / c) displacement exp(-2 u H(1))`.
pub fn hit_prob_asymptotic(p: &ModelParams, displacement: f64) -> Result<LogValue> {
    if !(displacement > 0.0) {
        return Err(Error::Domain(format!(
            "displacement must be positive, got {displacement}"
        )));
    }
    let d = p.derived();
    if displacement > d.sigma / 3.0 {
        log::warn!(
            "displacement {displacement} exceeds sigma/3 = {}; asymptotic form is unreliable",
            d.sigma / 3.0
        );
    }
    Ok(LogValue::from_log(
        (2.0 / d.c).ln() + displacement.ln() - 2.0 * d.u * eta(p),
    ))
}

/// Upper bound `exp(-(f - 2) depth^2 u / a^2)` on an excursion from
/// `a - depth` reaching `a - f depth` before returning to `a`.
pub fn excursion_bound(p: &ModelParams, depth: f64, multiplier: f64) -> Result<f64> {
    if !(multiplier > 2.0) {
        return Err(Error::Domain(format!(
            "multiplier must exceed 2, got {multiplier}"
        )));
    }
    let d = p.derived();
    Ok((-(multiplier - 2.0) * depth * depth * d.u / (d.a * d.a)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_diff;

    fn fig1() -> ModelParams {
        ModelParams::from_rho(100_000, 0.001, 0.68).unwrap()
    }

    fn sim() -> ModelParams {
        ModelParams::from_rho(2000, 0.025, 0.75).unwrap()
    }

    // Reference values from a 40-digit evaluation of the defining series.
    #[test]
    fn series_matches_reference_values() {
        let p = fig1();
        assert!(rel_diff(eta(&p), 0.827_196_108_564_278_6) < 1e-13);
        assert!(rel_diff(h_family(&p, 0.5, 0).unwrap(), 0.593_609_230_586_772_7) < 1e-13);
        assert!(rel_diff(h_family(&p, 1.1, 0).unwrap(), 0.816_064_555_967_572_4) < 1e-13);
        assert!(rel_diff(h_family(&p, 2.5, 0).unwrap(), -4.206_151_962_299_202_5) < 1e-12);
        assert!(rel_diff(eta(&sim()), 0.688_534_782_066_265_8) < 1e-13);
    }

    #[test]
    fn log_e_n_at_sim_params() {
        assert!(rel_diff(e_n(&sim()).log, 9.093_481_932_026_725) < 1e-13);
    }

    #[test]
    fn series_and_closed_form_agree() {
        for p in [fig1(), sim(), ModelParams::from_rho(500, 0.05, 0.3).unwrap()] {
            let rho = p.rho();
            for i in 1..=99 {
                let y = i as f64 / 100.0 * SERIES_LIMIT / (1.0 - rho);
                let a = h_series(p.m, rho, y);
                let b = h_closed(p.m, rho, y);
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "y={y} {a} {b}");
            }
        }
    }

    #[test]
    fn boundary_values() {
        let p = fig1();
        assert_eq!(h_family(&p, 0.0, 0).unwrap(), 0.0);
        assert!(h_family(&p, 1.0, 1).unwrap().abs() < 1e-15);
        assert_eq!(h_family(&p, 1.0, 0).unwrap(), eta(&p));
        let end = 1.0 / (1.0 - p.rho());
        assert!(h_family(&p, end, 0).unwrap().is_finite());
        assert!(h_family(&p, end * 1.0001, 0).is_err());
        assert!(h_family(&p, end, 1).is_err());
        assert!(h_family(&p, -0.1, 0).is_err());
        assert!(h_family(&p, 0.5, 4).is_err());
    }

    #[test]
    fn eta_near_small_m_limit() {
        let p = fig1();
        let rho = p.rho();
        let limit = (1.0 / rho - 1.0 + rho.ln()) / (1.0 - rho).powi(2);
        assert!(rel_diff(limit, 0.829_35) < 1e-4);
        assert!(rel_diff(eta(&p), limit) < 0.02);
    }

    #[test]
    fn finite_differences_match_next_order() {
        for p in [fig1(), sim()] {
            for &y in &[0.5, 0.9, 1.0, 1.1] {
                for k in 0..3u8 {
                    let h = 1e-4;
                    let fd = (h_family(&p, y + h, k).unwrap() - h_family(&p, y - h, k).unwrap())
                        / (2.0 * h);
                    let exact = h_family(&p, y, k + 1).unwrap();
                    let tol = 1e-5 * exact.abs().max(1e-3);
                    assert!((fd - exact).abs() < tol, "y={y} k={k} fd={fd} exact={exact}");
                }
            }
        }
    }

    #[test]
    fn strictly_concave() {
        for p in [fig1(), sim()] {
            let end = 1.0 / (1.0 - p.rho());
            for i in 1..1000 {
                let y = end * i as f64 / 1000.0;
                assert!(h_family(&p, y, 2).unwrap() < 0.0, "y={y}");
            }
        }
    }

    #[test]
    fn e_n_identities() {
        for p in [fig1(), sim()] {
            let d = p.derived();
            let e = e_n(&p);
            let v = v_n(&p);
            assert!(rel_diff(e.linear, v.linear * (std::f64::consts::PI / d.u).sqrt()) < 1e-12);
            let factored = v.linear * std::f64::consts::PI.sqrt() * d.sigma / (d.rho * d.a);
            assert!(rel_diff(e.linear, factored) < 1e-12);
        }
    }

    #[test]
    fn hit_prob_linear_in_displacement() {
        let p = fig1();
        let one = hit_prob_asymptotic(&p, 10.0).unwrap();
        let two = hit_prob_asymptotic(&p, 20.0).unwrap();
        assert!(rel_diff(two.linear, 2.0 * one.linear) < 1e-12);
        assert!(hit_prob_asymptotic(&p, 0.0).is_err());
    }

    #[test]
    fn excursion_bound_cases() {
        let p = fig1();
        let d = p.derived();
        assert!(excursion_bound(&p, 10.0, 2.0).is_err());
        assert!(rel_diff(excursion_bound(&p, d.a, 3.0).unwrap(), (-d.u).exp()) < 1e-12);
    }
}
