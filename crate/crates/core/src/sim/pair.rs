// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    /// Extinction time of the fittest class (the click).
    pub t0: f64,
    /// Size of the second class at the click.
    pub y1_at_t0: u64,
    pub max_y1: u64,
    pub n_events: u64,
    pub censored: bool,
}

/// Six-channel CTMC of the two lowest classes.
#[derive(Debug, Clone)]
pub struct PairSampler {
    params: ModelParams,
    horizon: f64,
}

impl PairSampler {
    pub fn new(p: &ModelParams, horizon: Option<f64>) -> Self {
        Self {
            params: *p,
            horizon: horizon.unwrap_or_else(|| super::y0::default_horizon(p)),
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, init0: usize, init1: usize, rng: &mut R) -> Result<PairRecord> {
        let p = &self.params;
        if init0 == 0 || init0 + init1 > p.n {
            return Err(Error::Domain(format!(
                "pair start ({init0}, {init1}) needs n0 >= 1 and n0 + n1 <= {}",
                p.n
            )));
        }
        let (mut n0, mut n1) = (init0, init1);
        let mut t = 0.0;
        let mut n_events = 0u64;
        let mut max_y1 = n1 as u64;
        while n0 > 0 {
            let rates = p.rates_pair_unchecked(n0, n1);
            #[cfg(debug_assertions)]
            {
                let up = crate::model::y1_up_aggregate(p, n0, n1);
                debug_assert!((rates.y1_up() - up).abs() <= 1e-12 * up.max(1e-300));
            }
            let channels = rates.as_array();
            let total: f64 = channels.iter().sum();
            let t_next = t + rng.sample::<f64, _>(Exp1) / total;
            if t_next > self.horizon {
                return Ok(PairRecord {
                    t0: self.horizon,
                    y1_at_t0: n1 as u64,
                    max_y1,
                    n_events,
                    censored: true,
                });
            }
            t = t_next;
            n_events += 1;
            let mut target = rng.random::<f64>() * total;
            let mut pick = 5;
            for (i, &r) in channels.iter().enumerate() {
                if target < r {
                    pick = i;
                    break;
                }
                target -= r;
            }
            // Guard against the last channel being empty after rounding.
            while channels[pick] == 0.0 {
                pick -= 1;
            }
            match pick {
                0 => {
                    n0 += 1;
                    n1 -= 1;
                }
                1 => {
                    n0 -= 1;
                    n1 += 1;
                }
                2 => n1 += 1,
                3 => n1 -= 1,
                4 => n0 += 1,
                _ => n0 -= 1,
            }
            max_y1 = max_y1.max(n1 as u64);
        }
        Ok(PairRecord {
            t0: t,
            y1_at_t0: n1 as u64,
            max_y1,
            n_events,
            censored: false,
        })
    }
}

/// Simulate `(Y0, Y1)` from `(init0, init1)` until `Y0` hits 0.
pub fn simulate_pair<R: Rng + ?Sized>(
    p: &ModelParams,
    init0: usize,
    init1: usize,
    horizon: Option<f64>,
    rng: &mut R,
) -> Result<PairRecord> {
    PairSampler::new(p, horizon).run(init0, init1, rng)
}
