//! Machine-readable verdicts. Each experiment produces a list of named
//! checks with observed values and thresholds; the verdict passes only if
//! every check passes. The JSON file is the contract consumed by CI; the
//! stdout rendering is for humans.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// One pass/fail criterion with its evidence.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    /// A check with an observed value judged against a threshold.
    pub fn measured(
        name: impl Into<String>,
        passed: bool,
        observed: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed,
            observed: Some(observed),
            threshold: Some(threshold),
            detail: detail.into(),
        }
    }

    /// A structural check without a scalar observation.
    pub fn structural(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            observed: None,
            threshold: None,
            detail: detail.into(),
        }
    }
}

/// Experiment outcome: all checks, the files written, and the seed used.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub experiment: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
}

impl Verdict {
    pub fn new(experiment: impl Into<String>, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            seed,
            passed: true,
            checks: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records a check; the verdict fails as soon as any check fails.
    pub fn push(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn add_output(&mut self, name: String) {
        self.outputs.push(name);
    }

    /// Writes `<experiment>_verdict.json` into `dir` and returns the name.
    pub fn write(&self, dir: &Path) -> Result<String> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let name = format!("{}_verdict.json", self.experiment);
        let path = dir.join(&name);
        let mut text = serde_json::to_string_pretty(self).context("serializing verdict")?;
        text.push('\n');
        std::fs::write(&path, text)
            .with_context(|| format!("writing verdict {}", path.display()))?;
        Ok(name)
    }

    /// Human rendering: one line per check, then the final verdict.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("[{status}] {}", check.name));
            if let (Some(obs), Some(thr)) = (check.observed, check.threshold) {
                out.push_str(&format!(" (observed {obs}, threshold {thr})"));
            }
            if !check.detail.is_empty() {
                out.push_str(&format!(": {}", check.detail));
            }
            out.push('\n');
        }
        let status = if self.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("verdict ({}): {status}\n", self.experiment));
        out
    }
}
