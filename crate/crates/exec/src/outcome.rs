use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Passed,
    FailedAssertion,
    RaisedError,
    TimedOut,
    Crashed,
}

impl ExecStatus {
    pub fn describe(self) -> &'static str {
        match self {
            ExecStatus::Passed => "passed",
            ExecStatus::FailedAssertion => "failed assertion",
            ExecStatus::RaisedError => "raised error",
            ExecStatus::TimedOut => "timed out",
            ExecStatus::Crashed => "crashed",
        }
    }
}

/// Result of one harness run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: ExecStatus,
    pub stdout_text: String,
    pub stderr_text: String,
    /// Observed-vs-expected for the first failing test, or the error trace.
    /// Empty when `status` is `Passed`.
    pub failure_detail: String,
    pub wall_time: f64,
    pub tests_passed: u32,
    pub tests_total: u32,
    /// Bytes the program wrote to stdout, including any not captured.
    pub stdout_bytes: u64,
}

impl ExecutionOutcome {
    pub fn passed(&self) -> bool {
        self.status == ExecStatus::Passed
    }

    /// Fraction of tests passed, in [0, 1].
    pub fn score(&self) -> f64 {
        if self.tests_total == 0 {
            0.0
        } else {
            f64::from(self.tests_passed) / f64::from(self.tests_total)
        }
    }
}

/// Program text that has passed the full harness. Only the sandbox creates these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidatedProgram {
    source: String,
}

impl ValidatedProgram {
    pub(crate) fn new(source: String) -> Self {
        Self { source }
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

#[derive(Debug, Clone)]
pub struct Validation {
    pub valid: bool,
    pub outcome: ExecutionOutcome,
    pub program: Option<ValidatedProgram>,
}
