//! Machine-readable run reports.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: String,
    pub measured: Value,
    pub tolerance: Value,
}

impl CheckResult {
    pub fn new(
        name: &str,
        pass: bool,
        measured: impl Into<Value>,
        tolerance: impl Into<Value>,
    ) -> Self {
        CheckResult {
            name: name.to_string(),
            status: if pass { "pass" } else { "fail" }.to_string(),
            measured: measured.into(),
            tolerance: tolerance.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

/// Wall-clock data lives in its own field so reports can be compared for
/// determinism with this field stripped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub kind: String,
    pub seed: u64,
    pub overall: String,
    pub config: Value,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
    pub timing: Timing,
}

impl RunReport {
    pub fn assemble(
        kind: &str,
        seed: u64,
        config: Value,
        checks: Vec<CheckResult>,
        artifacts: Vec<String>,
        wall_ms: f64,
    ) -> Self {
        let overall = if checks.iter().all(CheckResult::passed) {
            "pass"
        } else {
            "fail"
        }
        .to_string();
        RunReport {
            schema: 1,
            kind: kind.to_string(),
            seed,
            overall,
            config,
            checks,
            artifacts,
            timing: Timing { wall_ms },
        }
    }

    pub fn passed(&self) -> bool {
        self.overall == "pass"
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)
    }

    /// One line per check for the terminal.
    pub fn print_summary(&self) {
        for check in &self.checks {
            println!(
                "[{}] {}: measured {} (tolerance {})",
                check.status.to_uppercase(),
                check.name,
                check.measured,
                check.tolerance
            );
        }
        println!("overall: {}", self.overall);
    }
}
