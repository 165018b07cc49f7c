use std::sync::Arc;

use metahint_core::{
    now_millis, GenerationMetadata, Hint, HintId, HintRequest, HintType, ValidationOutcome,
};
use metahint_exec::{render_buggy_output, QuestionSpec, Sandbox, ValidatedProgram};
use serde::{Deserialize, Serialize};

use crate::parse::{extract_code_block, parse_response};
use crate::prompt::{assemble_candidate_request, assemble_prompt, SymbolicInfo, Templates};
use crate::provider::{ChatRequest, Phase, Provider};
use crate::GenerationError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Repair/optimize candidates tried before giving up on that section.
    pub max_candidate_attempts: u32,
    /// Hint-phase calls tried while the reply parses as empty.
    pub max_hint_attempts: u32,
    /// Time validated optimized programs (advisory; never gates the hint).
    pub measure_optimized_runtime: bool,
    pub runtime_repeats: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_candidate_attempts: 3,
            max_hint_attempts: 3,
            measure_optimized_runtime: true,
            runtime_repeats: 3,
        }
    }
}

/// Symbolic information plus how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Gathered {
    pub info: SymbolicInfo,
    pub validation: ValidationOutcome,
    pub optimized_runtime_secs: Option<f64>,
}

#[derive(Clone)]
pub struct HintPipeline {
    provider: Arc<dyn Provider>,
    sandbox: Sandbox,
    templates: Arc<Templates>,
    config: PipelineConfig,
}

impl HintPipeline {
    pub fn new(provider: Arc<dyn Provider>, sandbox: Sandbox) -> Self {
        Self {
            provider,
            sandbox,
            templates: Arc::new(Templates::builtin()),
            config: PipelineConfig::default(),
        }
    }

    pub fn with_templates(mut self, templates: Templates) -> Self {
        self.templates = Arc::new(templates);
        self
    }

    pub fn with_config(mut self, config: PipelineConfig) -> Self {
        self.config = config;
        self
    }

    pub fn provider(&self) -> &Arc<dyn Provider> {
        &self.provider
    }

    pub fn sandbox(&self) -> &Sandbox {
        &self.sandbox
    }

    pub fn templates(&self) -> &Templates {
        &self.templates
    }

    fn chat(&self, phase: Phase, req: &HintRequest, system: String, user: String, attempt: u32) -> ChatRequest {
        ChatRequest {
            model: self.provider.model().to_string(),
            system,
            user,
            temperature: 0.0,
            phase,
            question_id: req.question_id.clone(),
            hint_type: req.hint_type,
            attempt,
        }
    }

    /// First phase: run the student's code and, for debugging and optimization,
    /// obtain a validated candidate program from the provider.
    pub fn gather_symbolic_info(&self, req: &HintRequest, q: &QuestionSpec) -> Result<Gathered, GenerationError> {
        let outcome = self.sandbox.run_against_harness(&req.code_snapshot, q)?;
        let buggy_output = render_buggy_output(&outcome);
        let mut info = SymbolicInfo {
            buggy_output,
            repaired_program: None,
            optimized_program: None,
        };
        let phase = match req.hint_type {
            HintType::Planning => {
                return Ok(Gathered {
                    info,
                    validation: ValidationOutcome::NotApplicable,
                    optimized_runtime_secs: None,
                })
            }
            HintType::Debugging if outcome.passed() => {
                return Ok(Gathered {
                    info,
                    validation: ValidationOutcome::SkippedProgramPasses,
                    optimized_runtime_secs: None,
                })
            }
            HintType::Debugging => Phase::Repair,
            HintType::Optimization => Phase::Optimize,
        };

        let (validation, program) = self.request_candidate(phase, req, q, &info.buggy_output)?;
        let mut optimized_runtime_secs = None;
        match phase {
            Phase::Repair => info.repaired_program = program,
            _ => {
                if let Some(p) = &program {
                    if self.config.measure_optimized_runtime {
                        optimized_runtime_secs = self
                            .sandbox
                            .measure_runtime(p.source(), q, self.config.runtime_repeats)
                            .map_err(|e| tracing::warn!(error = %e, "could not time optimized program"))
                            .ok();
                    }
                }
                info.optimized_program = program;
            }
        }
        Ok(Gathered {
            info,
            validation,
            optimized_runtime_secs,
        })
    }

    fn request_candidate(
        &self,
        phase: Phase,
        req: &HintRequest,
        q: &QuestionSpec,
        buggy_output: &str,
    ) -> Result<(ValidationOutcome, Option<ValidatedProgram>), GenerationError> {
        let (system, user) = assemble_candidate_request(&self.templates, phase, req, q, buggy_output)?;
        let max = self.config.max_candidate_attempts.max(1);
        for attempt in 1..=max {
            let reply = match self
                .provider
                .complete(&self.chat(phase, req, system.clone(), user.clone(), attempt))
            {
                Ok(reply) => reply,
                Err(e) => {
                    tracing::warn!(%phase, attempt, error = %e, "candidate request failed; continuing without it");
                    return Ok((
                        ValidationOutcome::ProviderFailed {
                            attempts: attempt,
                            error: e.to_string(),
                        },
                        None,
                    ));
                }
            };
            let Some(code) = extract_code_block(&reply) else {
                tracing::debug!(%phase, attempt, "candidate reply had no code block");
                continue;
            };
            let validation = self.sandbox.validate_candidate(code, q)?;
            if let Some(program) = validation.program {
                return Ok((ValidationOutcome::Validated { attempts: attempt }, Some(program)));
            }
            tracing::debug!(%phase, attempt, status = ?validation.outcome.status, "candidate rejected");
        }
        Ok((ValidationOutcome::Exhausted { attempts: max }, None))
    }

    /// Full two-phase generation. Session bookkeeping (consent, quota) is the
    /// caller's job.
    pub fn generate_hint(&self, req: &HintRequest, q: &QuestionSpec) -> Result<Hint, GenerationError> {
        let gathered = self.gather_symbolic_info(req, q)?;
        let prompt = assemble_prompt(&self.templates, req, q, &gathered.info)?;
        let max = self.config.max_hint_attempts.max(1);
        let mut hint_attempts = 0;
        let parsed = loop {
            hint_attempts += 1;
            let raw = self
                .provider
                .complete(&self.chat(
                    Phase::Hint,
                    req,
                    prompt.system_text.clone(),
                    prompt.user_text.clone(),
                    hint_attempts,
                ))
                .map_err(GenerationError::GenerationFailed)?;
            match parse_response(&raw) {
                Ok(parsed) => break parsed,
                Err(GenerationError::EmptyResponse) if hint_attempts < max => continue,
                Err(e) => return Err(e),
            }
        };
        let hint_id = HintId::new(uuid::Uuid::new_v4().to_string()).expect("uuid is never empty");
        Ok(Hint {
            hint_id,
            request: req.clone(),
            explanation: parsed.explanation,
            hint_text: parsed.hint_text,
            delivered_at: now_millis().max(req.requested_at),
            generation_metadata: GenerationMetadata {
                provider: self.provider.name().to_string(),
                model: self.provider.model().to_string(),
                candidate_attempts: gathered.validation.attempts(),
                hint_attempts,
                validation: gathered.validation,
                optimized_runtime_secs: gathered.optimized_runtime_secs,
            },
        })
    }
}
