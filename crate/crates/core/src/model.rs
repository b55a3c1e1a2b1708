// SPDX-License-Identifier: Apache-2.0

//! Model parameters, derived scales and jump rates.
//!
//! Everything downstream consumes rates only through this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw model inputs: population size `n`, per-individual mutation rate `m`
/// and selection rate `s`, with `0 < m < s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub m: f64,
    pub s: f64,
}

impl ModelParams {
    pub fn new(n: usize, m: f64, s: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("N must be >= 2, got {n}")));
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParams(format!("m must be positive, got {m}")));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParams(format!("s must be positive, got {s}")));
        }
        if m >= s {
            return Err(Error::InvalidParams(format!(
                "m must be < s (m = {m}, s = {s})"
            )));
        }
        Ok(Self { n, m, s })
    }

    /// Parameters given as `(N, m, rho)` with `s = m / rho`.
    pub fn from_rho(n: usize, m: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParams(format!(
                "rho must lie in (0, 1), got {rho}"
            )));
        }
        Self::new(n, m, m / rho)
    }

    #[inline]
    pub fn rho(&self) -> f64 {
        self.m / self.s
    }

    pub fn derived(&self) -> DerivedParams {
        derive_params(self).expect("ModelParams are validated on construction")
    }

    fn check_state(&self, n: usize) -> Result<()> {
        if n > self.n {
            Err(Error::StateOutOfRange {
                state: n,
                max: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// Upward rate of the fittest class at size `k`, unchecked.
    #[inline]
    pub fn lambda(&self, k: usize) -> f64 {
        let k = k as f64;
        let big_n = self.n as f64;
        k * (0.5 * (1.0 - k / big_n) + self.s * (1.0 - k / big_n))
    }

    /// Downward rate of the fittest class at size `k`, unchecked.
    #[inline]
    pub fn mu(&self, k: usize) -> f64 {
        let k = k as f64;
        let big_n = self.n as f64;
        k * (0.5 * (1.0 - k / big_n) + self.m)
    }

    /// Jump rates of the fittest-class size `Y0` at state `k`.
    pub fn rates_y0(&self, k: usize) -> Result<RatePair> {
        self.check_state(k)?;
        Ok(RatePair {
            up: self.lambda(k),
            down: self.mu(k),
        })
    }

    /// Jump rates of the softly reflected chain: `Y0` except `0 -> 1` at rate 1.
    pub fn rates_y_star(&self, k: usize) -> Result<RatePair> {
        self.check_state(k)?;
        if k == 0 {
            return Ok(RatePair { up: 1.0, down: 0.0 });
        }
        self.rates_y0(k)
    }

    #[inline]
    pub fn lambda_star(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.lambda(k)
        }
    }

    /// Probability that a down-jump from `k` is caused by mutation,
    /// `m k / mu_k = 2m / (1 - k/N + 2m)`.
    #[inline]
    pub fn mutation_share(&self, k: usize) -> f64 {
        let x = k as f64 / self.n as f64;
        2.0 * self.m / (1.0 - x + 2.0 * self.m)
    }

    /// Six-channel rates of the two lowest classes `(n0, n1)`.
    pub fn rates_pair(&self, n0: usize, n1: usize) -> Result<PairChannelRates> {
        if n0 + n1 > self.n {
            return Err(Error::InvalidParams(format!(
                "class sizes {n0} + {n1} exceed N = {}",
                self.n
            )));
        }
        Ok(self.rates_pair_unchecked(n0, n1))
    }

    #[inline]
    pub fn rates_pair_unchecked(&self, n0: usize, n1: usize) -> PairChannelRates {
        let big_n = self.n as f64;
        let rest = (self.n - n0 - n1) as f64;
        let (n0, n1) = (n0 as f64, n1 as f64);
        let neutral = 1.0 / (2.0 * big_n);
        let fit = neutral + self.s / big_n;
        PairChannelRates {
            zero_from_one: fit * n0 * n1,
            one_from_zero: neutral * n0 * n1 + self.m * n0,
            one_from_rest: fit * n1 * rest,
            rest_from_one: neutral * n1 * rest + self.m * n1,
            zero_from_rest: fit * n0 * rest,
            rest_from_zero: neutral * n0 * rest,
        }
    }
}

/// Derived scales of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Mutation-selection ratio `m / s`.
    pub rho: f64,
    /// Center of attraction `N (1 - rho)`.
    pub a: f64,
    pub a_floor: usize,
    /// Critical size `1 / (s - m)`. Doubles as the relaxation time unit.
    pub c: f64,
    /// Exponential-regime parameter `N m (1 - rho)^2`.
    pub u: f64,
    /// Fluctuation scale `c sqrt(u)`.
    pub sigma: f64,
}

/// Validate `p` and compute its derived scales.
pub fn derive_params(p: &ModelParams) -> Result<DerivedParams> {
    let p = ModelParams::new(p.n, p.m, p.s)?;
    let big_n = p.n as f64;
    let rho = p.rho();
    let a = big_n * (1.0 - rho);
    let c = 1.0 / (p.s - p.m);
    let u = big_n * p.m * (1.0 - rho).powi(2);
    let sigma = c * u.sqrt();
    Ok(DerivedParams {
        rho,
        a,
        // m / (m / rho) can land a few ulps off rho, amplified by 1 / (1 - rho).
        a_floor: (a + 1e-9 * a.max(1.0)).floor() as usize,
        c,
        u,
        sigma,
    })
}

impl DerivedParams {
    /// Human-readable warnings for parameter sets outside the exponential
    /// regime. Computations still run; the asymptotics just lose meaning.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.u < 1.0 {
            out.push(format!(
                "u = {:.6} < 1: outside exponential regime",
                self.u
            ));
        }
        if self.a / self.c < 4.0 {
            out.push(format!(
                "a/c = {:.6} < 4: critical size not small against the center",
                self.a / self.c
            ));
        }
        out
    }
}

/// Upward and downward jump rates at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub up: f64,
    pub down: f64,
}

/// Rates of the six state changes of `(Y0, Y1)`. Field names read
/// "`<gaining class>`_from_`<losing class>`", with `rest` for all classes
/// above the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairChannelRates {
    /// `(n0 + 1, n1 - 1)`
    pub zero_from_one: f64,
    /// `(n0 - 1, n1 + 1)`, includes mutation of class 0
    pub one_from_zero: f64,
    /// `(n0, n1 + 1)`
    pub one_from_rest: f64,
    /// `(n0, n1 - 1)`, includes mutation of class 1
    pub rest_from_one: f64,
    /// `(n0 + 1, n1)`
    pub zero_from_rest: f64,
    /// `(n0 - 1, n1)`
    pub rest_from_zero: f64,
}

impl PairChannelRates {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.zero_from_one,
            self.one_from_zero,
            self.one_from_rest,
            self.rest_from_one,
            self.zero_from_rest,
            self.rest_from_zero,
        ]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn y1_up(&self) -> f64 {
        self.one_from_zero + self.one_from_rest
    }

    pub fn y1_down(&self) -> f64 {
        self.zero_from_one + self.rest_from_one
    }

    pub fn y0_up(&self) -> f64 {
        self.zero_from_one + self.zero_from_rest
    }

    pub fn y0_down(&self) -> f64 {
        self.one_from_zero + self.rest_from_zero
    }
}

/// Closed-form upward rate of `Y1` given `(n0, n1)`.
pub fn y1_up_aggregate(p: &ModelParams, n0: usize, n1: usize) -> f64 {
    let big_n = p.n as f64;
    let (x0, x1) = (n0 as f64, n1 as f64);
    p.m * x0 + x1 * (0.5 * (1.0 - x1 / big_n) + (p.m / p.rho()) * (1.0 - x0 / big_n - x1 / big_n))
}

/// Closed-form downward rate of `Y1` given `(n0, n1)`.
pub fn y1_down_aggregate(p: &ModelParams, n0: usize, n1: usize) -> f64 {
    let big_n = p.n as f64;
    let (x0, x1) = (n0 as f64, n1 as f64);
    x1 * (0.5 * (1.0 - x1 / big_n) + p.m + (p.m / p.rho()) * x0 / big_n)
}
