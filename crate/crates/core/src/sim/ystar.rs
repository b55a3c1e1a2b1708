// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Time-weighted occupation of the softly reflected chain over
/// `[0, duration]`, normalised to a probability vector on `0..=N`.
pub fn simulate_y_star<R: Rng + ?Sized>(
    p: &ModelParams,
    init: usize,
    duration: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if init > p.n {
        return Err(Error::StateOutOfRange { state: init, max: p.n });
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Domain(format!("duration must be positive, got {duration}")));
    }
    let n = p.n;
    let (inv_total, p_up): (Vec<f64>, Vec<f64>) = (0..=n)
        .map(|k| {
            let (up, down) = (p.lambda_star(k), p.mu(k));
            (1.0 / (up + down), up / (up + down))
        })
        .unzip();
    let mut occupation = vec![0.0; n + 1];
    let mut state = init;
    let mut t = 0.0;
    loop {
        let hold: f64 = rng.sample::<f64, _>(Exp1) * inv_total[state];
        if t + hold >= duration {
            occupation[state] += duration - t;
            break;
        }
        occupation[state] += hold;
        t += hold;
        if rng.random::<f64>() < p_up[state] {
            state += 1;
        } else {
            state -= 1;
        }
    }
    let total: f64 = occupation.iter().sum();
    occupation.iter_mut().for_each(|w| *w /= total);
    Ok(occupation)
}
