// SPDX-License-Identifier: Apache-2.0

//! Output directory resolution and files with a reproducibility header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use ratchet_core::ModelParams;

use crate::config::{Format, RunConfig};

pub const OUT_DIR_ENV: &str = "RATCHET_OUT_DIR";

/// Flags that only affect how a run executes. They are left out of the
/// recorded command line.
const EXECUTION_FLAGS: [&str; 2] = ["--workers", "--out"];

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params: ModelParams,
    pub seed: u64,
    pub config: RunConfig,
}

impl Metadata {
    pub fn new(argv: &[String], params: ModelParams, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: recorded_command(argv),
            params,
            seed: config.seed(),
            config: config.reproducible(),
        }
    }

    fn csv_header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: {} {}", self.tool, self.version);
        let _ = writeln!(out, "# command: {}", self.command);
        let _ = writeln!(
            out,
            "# params: N={} m={} s={}",
            self.params.n, self.params.m, self.params.s
        );
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(
            out,
            "# config: {}",
            serde_json::to_string(&self.config).expect("config serializes")
        );
        out
    }
}

fn recorded_command(argv: &[String]) -> String {
    let mut kept = Vec::new();
    let mut skip_next = false;
    let program = argv.first().map(|a| {
        Path::new(a)
            .file_name()
            .map_or_else(|| a.clone(), |f| f.to_string_lossy().into_owned())
    });
    kept.extend(program);
    for arg in argv.iter().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        if EXECUTION_FLAGS.contains(&arg.as_str()) {
            skip_next = true;
            continue;
        }
        if EXECUTION_FLAGS.iter().any(|f| arg.starts_with(&format!("{f}="))) {
            continue;
        }
        kept.push(arg.clone());
    }
    kept.join(" ")
}

/// `--out`, else `$RATCHET_OUT_DIR/<cmd>-<timestamp>`, else
/// `./out/<cmd>-<timestamp>`.
pub fn output_dir(config: &RunConfig, command: &str) -> PathBuf {
    if let Some(dir) = &config.out {
        return dir.clone();
    }
    let root = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from);
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    root.join(format!("{command}-{stamp}"))
}

/// Writes files into one directory, each prefixed with the run metadata.
pub struct Emitter {
    dir: PathBuf,
    format: Format,
    meta: Metadata,
}

impl Emitter {
    pub fn new(dir: PathBuf, format: Format, meta: Metadata) -> Self {
        Self { dir, format, meta }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn format(&self) -> Format {
        self.format
    }

    fn write(&self, name: &str, body: &str) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// CSV body (header row first) behind `# key: value` metadata lines.
    pub fn csv(&self, name: &str, body: &str) -> anyhow::Result<PathBuf> {
        let mut text = self.meta.csv_header();
        text.push_str(body);
        self.write(&format!("{name}.csv"), &text)
    }

    /// JSON object whose first key is `metadata`.
    pub fn json<T: Serialize>(&self, name: &str, key: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut doc = serde_json::Map::new();
        doc.insert("metadata".into(), serde_json::to_value(&self.meta)?);
        doc.insert(key.into(), serde_json::to_value(value)?);
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
        text.push('\n');
        self.write(&format!("{name}.json"), &text)
    }

    /// Named scalars as `key,value` CSV or a JSON object, per the format.
    pub fn table(&self, name: &str, rows: &[(String, serde_json::Value)]) -> anyhow::Result<PathBuf> {
        match self.format {
            Format::Csv => {
                let mut body = String::from("key,value\n");
                for (k, v) in rows {
                    let _ = writeln!(body, "{k},{}", plain(v));
                }
                self.csv(name, &body)
            }
            Format::Json => {
                let map: serde_json::Map<String, serde_json::Value> = rows.iter().cloned().collect();
                self.json(name, "values", &map)
            }
        }
    }
}

fn plain(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// CSV cell without separators.
pub fn cell(s: &str) -> String {
    s.replace(',', ";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn execution_flags_are_dropped() {
        let argv: Vec<String> = ["/usr/bin/ratchet", "sim", "y0", "--workers", "8", "--seed", "7", "--out=/tmp/x"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(recorded_command(&argv), "ratchet sim y0 --seed 7");
    }

    #[test]
    fn explicit_out_wins() {
        let cfg = RunConfig {
            out: Some(PathBuf::from("here")),
            ..RunConfig::default()
        };
        assert_eq!(output_dir(&cfg, "sim"), PathBuf::from("here"));
    }
}
