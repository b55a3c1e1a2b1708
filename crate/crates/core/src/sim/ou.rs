// SPDX-License-Identifier: Apache-2.0

use crate::model::DerivedParams;

/// Sample a piecewise-constant `(time, state)` path on a uniform grid in
/// rescaled time `t / c`, mapping states by `(y - a) / sigma`.
///
/// `step` is in rescaled units. Grid points run from 0 up to (not including)
/// the time of the last path point.
pub fn rescale_ou(d: &DerivedParams, path: &[(f64, u32)], step: f64) -> Vec<(f64, f64)> {
    assert!(step > 0.0, "grid step must be positive");
    let Some(&(t_end, _)) = path.last() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut idx = 0usize;
    for k in 0usize.. {
        let tau = k as f64 * step;
        let t = tau * d.c;
        if t >= t_end {
            break;
        }
        // Grid paths land on the same instants up to rounding.
        while idx + 1 < path.len() && path[idx + 1].0 <= t * (1.0 + 1e-12) {
            idx += 1;
        }
        let y = path[idx].1 as f64;
        out.push((tau, (y - d.a) / d.sigma));
    }
    out
}

/// Trim a rescaled path to its stationary part: drop `burn_in` rescaled time
/// units at the start and the last `tail` units.
pub fn stationary_window(path: &[(f64, f64)], burn_in: f64, tail: f64) -> &[(f64, f64)] {
    let Some(&(t_last, _)) = path.last() else {
        return path;
    };
    let lo = path.partition_point(|&(t, _)| t < burn_in);
    let hi = path.partition_point(|&(t, _)| t <= t_last - tail);
    if lo >= hi {
        &path[0..0]
    } else {
        &path[lo..hi]
    }
}
