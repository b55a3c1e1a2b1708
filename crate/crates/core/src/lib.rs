// SPDX-License-Identifier: Apache-2.0

//! Exact analytics and Monte Carlo simulation for Muller's ratchet under
//! tournament selection.
//!
//! The crate is layered bottom-up:
//!
//! - [`model`]: parameters, derived scales and every jump-rate formula.
//! - [`potential`]: log-space potential tables, the `H` family, closed-form
//!   hitting times and the softly reflected equilibrium.
//! - [`oracle`]: linear-algebra ground truth on the tridiagonal generator.
//! - [`sim`]: exact event-driven simulation with reproducible replicate
//!   streams, behind a registry of named simulators.
//! - [`stats`]: goodness-of-fit and time-series diagnostics.
//! - [`verify`]: named verification suites, selected at runtime.

pub mod error;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod potential;
pub mod sim;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use model::{derive_params, DerivedParams, ModelParams, RatePair};
