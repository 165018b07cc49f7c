use std::fmt::Write;

use crate::outcome::{ExecStatus, ExecutionOutcome};

/// Returned instead of a failure report when every test passes.
pub const PASSED_MARKER: &str = "PROGRAM PASSED ALL TESTS";
/// Upper bound, in bytes, of a rendered report before the truncation marker.
pub const BUGGY_OUTPUT_LIMIT: usize = 4096;
pub const TRUNCATION_MARKER: &str = "\n[... output truncated ...]";

/// Renders an outcome for embedding in a prompt. The result is at most
/// `BUGGY_OUTPUT_LIMIT` bytes plus `TRUNCATION_MARKER`.
pub fn render_buggy_output(outcome: &ExecutionOutcome) -> String {
    if outcome.status == ExecStatus::Passed {
        return PASSED_MARKER.to_string();
    }
    let mut text = String::new();
    let _ = writeln!(
        text,
        "Status: {} ({} of {} tests passed)",
        outcome.status.describe(),
        outcome.tests_passed,
        outcome.tests_total
    );
    if !outcome.failure_detail.is_empty() {
        text.push_str(outcome.failure_detail.trim_end());
        text.push('\n');
    }
    if !outcome.stdout_text.is_empty() {
        text.push_str("--- program output ---\n");
        text.push_str(&outcome.stdout_text);
        if !outcome.stdout_text.ends_with('\n') {
            text.push('\n');
        }
    }
    if !outcome.stderr_text.is_empty() && outcome.status != ExecStatus::RaisedError {
        text.push_str("--- error output ---\n");
        text.push_str(&outcome.stderr_text);
    }
    truncate_with_marker(text.trim_end().to_string(), BUGGY_OUTPUT_LIMIT)
}

pub(crate) fn truncate_with_marker(mut text: String, limit: usize) -> String {
    if text.len() <= limit {
        return text;
    }
    let mut cut = limit;
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    text.truncate(cut);
    text.push_str(TRUNCATION_MARKER);
    text
}
