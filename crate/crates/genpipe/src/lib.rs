//! Two-phase hint generation.
//!
//! Phase one gathers symbolic information about the student's program: the
//! rendered test output and, for debugging and optimization hints, a candidate
//! program from the provider that must pass the full test harness before it
//! may appear in a prompt. Phase two assembles a guard-railed prompt and asks
//! the provider for an explanation plus a single Socratic hint.

mod mock;
mod parse;
mod pipeline;
mod prompt;
mod provider;
mod remote;

use metahint_core::HintType;
use metahint_exec::SandboxError;
use thiserror::Error;

pub use mock::{MockProvider, MockScript, ScriptedReply, MOCK_PROVIDER_NAME};
pub use parse::{extract_code_block, parse_response, ParsedHint};
pub use pipeline::{Gathered, HintPipeline, PipelineConfig};
pub use prompt::{
    assemble_candidate_request, assemble_prompt, PromptBundle, SymbolicInfo, Templates, GUARD_RAIL_CLAUSE,
    SECTION_BUGGY_OUTPUT, SECTION_OPTIMIZED, SECTION_QUESTION, SECTION_REFLECTION, SECTION_REPAIRED,
    SECTION_STUDENT_CODE, TEMPLATE_NAMES,
};
pub use provider::{ChatRequest, Phase, Provider, ProviderConfig, ProviderError, ProviderKind};
pub use remote::RemoteProvider;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("prompt template `{0}` is missing")]
    TemplateMissing(String),
    #[error("symbolic information does not fit a {0} hint")]
    ContextMismatch(HintType),
    #[error("provider returned an empty hint")]
    EmptyResponse,
    #[error("hint generation failed: {0}")]
    GenerationFailed(ProviderError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
}
