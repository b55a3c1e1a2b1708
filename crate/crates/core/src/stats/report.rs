// SPDX-License-Identifier: Apache-2.0

use std::fmt::{self, Write as _};

use serde::Serialize;

/// Acceptance rule attached to a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    /// `p_value > alpha`.
    PValueAbove { alpha: f64 },
    /// `statistic <= max`.
    AtMost { max: f64 },
    /// `statistic < max`.
    LessThan { max: f64 },
    /// `statistic >= min`.
    AtLeast { min: f64 },
    /// `lo <= statistic <= hi`.
    Within { lo: f64, hi: f64 },
    /// Recorded but never fails.
    ReportOnly,
}

impl Gate {
    pub fn admits(&self, statistic: f64, p_value: Option<f64>) -> bool {
        match *self {
            Gate::PValueAbove { alpha } => p_value.is_some_and(|p| p > alpha),
            Gate::AtMost { max } => statistic <= max,
            Gate::LessThan { max } => statistic < max,
            Gate::AtLeast { min } => statistic >= min,
            Gate::Within { lo, hi } => (lo..=hi).contains(&statistic),
            Gate::ReportOnly => true,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::PValueAbove { alpha } => write!(f, "p > {alpha}"),
            Gate::AtMost { max } => write!(f, "<= {max}"),
            Gate::LessThan { max } => write!(f, "< {max}"),
            Gate::AtLeast { min } => write!(f, ">= {min}"),
            Gate::Within { lo, hi } => write!(f, "in [{lo}, {hi}]"),
            Gate::ReportOnly => write!(f, "report-only"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    ReportOnly,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ReportOnly => "REPORT",
        })
    }
}

/// Outcome of one check. The verdict always agrees with the gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub suite: String,
    pub check: String,
    pub criterion: Option<u8>,
    pub statistic: f64,
    /// Reference value or distribution name.
    pub reference: String,
    pub p_value: Option<f64>,
    pub gate: Gate,
    pub verdict: Verdict,
    pub n_samples: usize,
    pub censored_count: usize,
    /// Auxiliary named quantities.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<(String, f64)>,
}

impl TestReport {
    pub fn new(check: impl Into<String>, statistic: f64, reference: impl Into<String>, gate: Gate) -> Self {
        let mut r = Self {
            suite: String::new(),
            check: check.into(),
            criterion: None,
            statistic,
            reference: reference.into(),
            p_value: None,
            gate,
            verdict: Verdict::Pass,
            n_samples: 0,
            censored_count: 0,
            details: Vec::new(),
        };
        r.refresh();
        r
    }

    fn refresh(&mut self) {
        self.verdict = match self.gate {
            Gate::ReportOnly => Verdict::ReportOnly,
            g if g.admits(self.statistic, self.p_value) => Verdict::Pass,
            _ => Verdict::Fail,
        };
    }

    pub fn with_gate(mut self, gate: Gate) -> Self {
        self.gate = gate;
        self.refresh();
        self
    }

    pub fn with_p_value(mut self, p: f64) -> Self {
        self.p_value = Some(p);
        self.refresh();
        self
    }

    pub fn with_samples(mut self, n: usize, censored: usize) -> Self {
        self.n_samples = n;
        self.censored_count = censored;
        self
    }

    pub fn with_detail(mut self, name: impl Into<String>, value: f64) -> Self {
        self.details.push((name.into(), value));
        self
    }

    pub fn labeled(mut self, suite: &str, check: impl Into<String>, criterion: Option<u8>) -> Self {
        self.suite = suite.to_string();
        self.check = check.into();
        self.criterion = criterion;
        self
    }

    pub fn detail(&self, name: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{:<6} {:<24} {:<34} stat={:<12.6e}",
            self.verdict.to_string(),
            self.suite,
            self.check,
            self.statistic
        );
        if let Some(p) = self.p_value {
            let _ = write!(s, " p={p:<10.4e}");
        }
        let _ = write!(s, " gate: {} (ref {})", self.gate, self.reference);
        if self.n_samples > 0 {
            let _ = write!(s, " n={}", self.n_samples);
        }
        if self.censored_count > 0 {
            let _ = write!(s, " censored={}", self.censored_count);
        }
        s
    }
}

/// Fixed-width table of reports, one per line.
pub fn summary_table(reports: &[TestReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&r.line());
        out.push('\n');
    }
    let failed = reports.iter().filter(|r| r.verdict == Verdict::Fail).count();
    let passed = reports.iter().filter(|r| r.verdict == Verdict::Pass).count();
    let _ = writeln!(
        out,
        "{passed} passed, {failed} failed, {} report-only",
        reports.len() - passed - failed
    );
    out
}
