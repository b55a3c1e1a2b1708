// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a flat JSON file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use ratchet_core::verify::DEFAULT_SEED;
use ratchet_core::ModelParams;

use crate::UsageError;

pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_M: f64 = 0.025;
pub const DEFAULT_RHO: f64 = 0.75;
pub const DEFAULT_REPLICATES: usize = 10;
pub const DEFAULT_CLICKS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every setting a command may read. Unset fields fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_second: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clicks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.clone().or_else(|| $base.$f.clone())),* }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(|e| UsageError(format!("{e:#}")))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    /// Fields set in `top` win over `self`.
    pub fn overlay(&self, top: &RunConfig) -> RunConfig {
        let mut base = self.clone();
        if top.s.is_some() || top.rho.is_some() {
            base.s = None;
            base.rho = None;
        }
        overlay!(base, top; n, m, s, rho, seed, replicates, workers, horizon, epsilon,
            init, init_second, clicks, thin, duration, format, out)
    }

    pub fn params(&self) -> ratchet_core::Result<ModelParams> {
        let n = self.n.unwrap_or(DEFAULT_N);
        let m = self.m.unwrap_or(DEFAULT_M);
        match (self.s, self.rho) {
            (Some(_), Some(_)) => Err(ratchet_core::Error::InvalidParams(
                "give either s or rho, not both".into(),
            )),
            (Some(s), None) => ModelParams::new(n, m, s),
            (None, rho) => ModelParams::from_rho(n, m, rho.unwrap_or(DEFAULT_RHO)),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    /// Copy without settings that affect only how a run executes, so that
    /// outputs do not depend on them.
    pub fn reproducible(&self) -> RunConfig {
        RunConfig {
            workers: None,
            out: None,
            ..self.clone()
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Population size.
    #[arg(short = 'N', global = true)]
    pub n: Option<usize>,
    /// Per-individual mutation rate.
    #[arg(short = 'm', global = true)]
    pub m: Option<f64>,
    /// Selection rate.
    #[arg(short = 's', global = true, conflicts_with = "rho")]
    pub s: Option<f64>,
    /// Mutation-selection ratio m/s.
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Worker threads for simulation (does not change results).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Censoring horizon in time units.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Level floor(2 epsilon a) that starts the mutation count.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Initial size of the fittest class.
    #[arg(long, global = true)]
    pub init: Option<usize>,
    /// Initial size of the second class (pair simulator).
    #[arg(long, global = true)]
    pub init_second: Option<usize>,
    /// Clicks per ratchet replicate.
    #[arg(long, global = true)]
    pub clicks: Option<usize>,
    /// Store paths on a grid with this time step.
    #[arg(long, global = true)]
    pub thin: Option<f64>,
    /// Run length of the reflected chain.
    #[arg(long, global = true)]
    pub duration: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl ConfigArgs {
    fn as_config(&self) -> RunConfig {
        RunConfig {
            n: self.n,
            m: self.m,
            s: self.s,
            rho: self.rho,
            seed: self.seed,
            replicates: self.replicates,
            workers: self.workers,
            horizon: self.horizon,
            epsilon: self.epsilon,
            init: self.init,
            init_second: self.init_second,
            clicks: self.clicks,
            thin: self.thin,
            duration: self.duration,
            format: self.format,
            out: self.out.clone(),
        }
    }

    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(&self.as_config()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig {
            n: Some(500),
            m: Some(0.01),
            rho: Some(0.5),
            seed: Some(9),
            thin: Some(1.5),
            format: Some(Format::Json),
            out: Some(PathBuf::from("runs/a")),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"N\":500"), "{text}");
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            n: Some(500),
            m: Some(0.01),
            seed: Some(1),
            ..RunConfig::default()
        };
        let flags = RunConfig {
            seed: Some(2),
            ..RunConfig::default()
        };
        let merged = file.overlay(&flags);
        assert_eq!(merged.seed, Some(2));
        assert_eq!(merged.n, Some(500));
        let file = RunConfig {
            s: Some(0.5),
            ..file
        };
        let flags = RunConfig {
            rho: Some(0.5),
            ..RunConfig::default()
        };
        let merged = file.overlay(&flags);
        assert_eq!((merged.s, merged.rho), (None, Some(0.5)));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>("{\"N\": 10, \"bogus\": 1}").is_err());
    }

    #[test]
    fn s_and_rho_are_exclusive() {
        let cfg = RunConfig {
            s: Some(0.1),
            rho: Some(0.5),
            ..RunConfig::default()
        };
        assert!(cfg.params().is_err());
        let d = RunConfig::default().params().unwrap().derived();
        assert_eq!(d.a_floor, 500);
    }
}
