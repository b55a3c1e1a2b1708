// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("state {state} outside 0..={max}")]
    StateOutOfRange { state: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("iteration did not converge after {iterations} steps (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate chain: {0}")]
    Degenerate(String),

    #[error("unknown name `{name}`; valid: {valid}")]
    UnknownName { name: String, valid: String },
}

pub type Result<T> = std::result::Result<T, Error>;
