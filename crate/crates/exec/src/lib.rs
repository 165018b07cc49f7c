//! Runs untrusted student programs against a question's test harness.
//!
//! Each run gets a fresh temporary directory and a separate interpreter
//! process in its own process group, with wall-clock timeout, rlimits
//! (address space, CPU, file size, process count) and an interpreter-level
//! audit hook that terminates the program on process creation or network
//! access. When the service runs as root the child also drops to an
//! unprivileged uid.

mod outcome;
mod question;
mod render;
mod sandbox;

pub use outcome::{ExecStatus, ExecutionOutcome, Validation, ValidatedProgram};
pub use question::{
    load_question_file, load_questions_dir, Comparison, QuestionError, QuestionSpec, TestCase,
    DEFAULT_MEMORY_LIMIT, DEFAULT_TIME_LIMIT_SECS,
};
pub use render::{render_buggy_output, BUGGY_OUTPUT_LIMIT, PASSED_MARKER, TRUNCATION_MARKER};
pub use sandbox::{MeasureError, Sandbox, SandboxConfig, SandboxError};
