//! Verification reports and the tail-bound pass rule.

use serde::{Deserialize, Serialize};

use super::SuiteId;
use crate::error::Result;

pub const REPORT_VERSION: &str = "tmlab-report/1";

/// One suite's outcome. Field order is the serialization order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub suite: SuiteId,
    pub trials: usize,
    pub violations: usize,
    pub max_violation: f64,
    pub empirical_prob: f64,
    pub bound_value: f64,
    pub mc_stderr: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub regime_notes: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{:<22} {} violations={} max_violation={:.3e} empirical={:.4} bound={:.4} stderr={:.2e}",
            self.suite.name(),
            if self.passed() { "PASS" } else { "FAIL" },
            self.violations,
            self.max_violation,
            self.empirical_prob,
            self.bound_value,
            self.mc_stderr,
        )
    }
}

pub fn reports_to_json(reports: &[VerificationReport]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(reports)?;
    s.push('\n');
    Ok(s)
}

/// Empirical tail probability against a Monte Carlo bound estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailResult {
    pub label: String,
    pub empirical: f64,
    pub bound: f64,
    /// Combined standard error of the empirical frequency and the bound.
    pub stderr: f64,
}

impl TailResult {
    /// `empirical - min(1, bound) - 3 stderr`; the check passes when this is `<= 0`.
    pub fn excess(&self) -> f64 {
        self.empirical - self.bound.min(1.0) - 3.0 * self.stderr
    }

    pub fn passed(&self) -> bool {
        self.excess() <= 0.0
    }
}
