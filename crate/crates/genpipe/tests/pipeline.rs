use std::sync::{Arc, Mutex};

use metahint_core::{now_millis, AssignmentId, HintRequest, HintType, QuestionId, StudentId, ValidationOutcome};
use metahint_exec::{QuestionSpec, Sandbox, TestCase, PASSED_MARKER};
use metahint_genpipe::{
    ChatRequest, GenerationError, HintPipeline, MockProvider, MockScript, Phase, Provider, ProviderError,
    ScriptedReply, Templates, GUARD_RAIL_CLAUSE, MOCK_PROVIDER_NAME, SECTION_BUGGY_OUTPUT, SECTION_OPTIMIZED,
    SECTION_REFLECTION, SECTION_REPAIRED,
};

const BUGGY: &str = "def total(xs):\n    s = 0\n    for i in range(1, len(xs)):\n        s += xs[i]\n    return s\n";
const FIXED: &str = "def total(xs):\n    s = 0\n    for x in xs:\n        s += x\n    return s\n";
const FAST: &str = "def total(xs):\n    return sum(xs)\n";
const WRONG: &str = "def total(xs):\n    return 42\n";
const HINT_REPLY: &str = "EXPLANATION: the loop skips index 0\nHINT: Which element does your loop visit first?";

fn question() -> QuestionSpec {
    QuestionSpec::new(
        QuestionId::new("sum").unwrap(),
        AssignmentId::new("A2").unwrap(),
        "Return the sum of a list of numbers.",
        vec![
            TestCase {
                call: "total([1, 2, 3])".into(),
                expected: "6".into(),
                comparison: Default::default(),
            },
            TestCase {
                call: "total([])".into(),
                expected: "0".into(),
                comparison: Default::default(),
            },
        ],
    )
}

fn request(ty: HintType, code: &str, reflection: &str) -> HintRequest {
    HintRequest {
        student_id: StudentId::new("s1").unwrap(),
        question_id: QuestionId::new("sum").unwrap(),
        hint_type: ty,
        reflection: reflection.into(),
        code_snapshot: code.into(),
        requested_at: now_millis(),
    }
}

fn fenced(code: &str) -> ScriptedReply {
    ScriptedReply::Text(format!("```python\n{code}```"))
}

/// Records every request, then delegates to a mock.
struct Recording {
    inner: MockProvider,
    seen: Mutex<Vec<ChatRequest>>,
}

impl Recording {
    fn new(script: MockScript) -> Arc<Self> {
        Arc::new(Self {
            inner: MockProvider::new(script),
            seen: Mutex::new(Vec::new()),
        })
    }

    fn hint_prompts(&self) -> Vec<ChatRequest> {
        let seen = self.seen.lock().unwrap();
        seen.iter().filter(|r| r.phase == Phase::Hint).cloned().collect()
    }
}

impl Provider for Recording {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn model(&self) -> &str {
        self.inner.model()
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        self.seen.lock().unwrap().push(request.clone());
        self.inner.complete(request)
    }
}

fn base_script() -> MockScript {
    MockScript::default().with("hint", vec![ScriptedReply::Text(HINT_REPLY.into())])
}

#[test]
fn planning_uses_buggy_output_only() {
    let provider = Recording::new(base_script());
    let pipeline = HintPipeline::new(provider.clone(), Sandbox::default());
    let req = request(HintType::Planning, BUGGY, "I am not sure how to start.");
    let gathered = pipeline.gather_symbolic_info(&req, &question()).unwrap();
    assert!(gathered.info.buggy_output.contains("failed assertion"));
    assert!(gathered.info.repaired_program.is_none());
    assert!(gathered.info.optimized_program.is_none());
    assert_eq!(gathered.validation, ValidationOutcome::NotApplicable);

    let hint = pipeline.generate_hint(&req, &question()).unwrap();
    assert_eq!(hint.hint_text, "Which element does your loop visit first?");
    assert_eq!(hint.explanation, "the loop skips index 0");
    assert_eq!(hint.generation_metadata.provider, MOCK_PROVIDER_NAME);
    assert_eq!(hint.generation_metadata.candidate_attempts, 0);
    let prompts = provider.hint_prompts();
    let user = &prompts.last().unwrap().user;
    assert!(!user.contains(SECTION_REPAIRED));
    assert!(!user.contains(SECTION_OPTIMIZED));
    assert!(user.contains("I am not sure how to start."));
    assert!(provider.seen.lock().unwrap().iter().all(|r| r.phase == Phase::Hint));
}

#[test]
fn debugging_retries_until_a_repair_validates() {
    let script = base_script().with("repair", vec![fenced(WRONG), fenced(FIXED)]);
    let provider = Recording::new(script);
    let pipeline = HintPipeline::new(provider.clone(), Sandbox::default());
    let req = request(HintType::Debugging, BUGGY, "");
    let hint = pipeline.generate_hint(&req, &question()).unwrap();
    assert_eq!(
        hint.generation_metadata.validation,
        ValidationOutcome::Validated { attempts: 2 }
    );
    assert_eq!(hint.generation_metadata.candidate_attempts, 2);
    let prompt = provider.hint_prompts().pop().unwrap();
    assert!(prompt.user.contains(SECTION_BUGGY_OUTPUT));
    assert!(prompt.user.contains(SECTION_REPAIRED));
    assert!(prompt.user.contains(FIXED));
    assert!(!prompt.user.contains(WRONG), "unvalidated candidate leaked into prompt");
    assert!(!prompt.user.contains(SECTION_REFLECTION));
    assert!(prompt.system.contains(GUARD_RAIL_CLAUSE));
    assert!(prompt.system.contains("exactly one bug"));
}

#[test]
fn optimization_without_valid_candidate_still_hints() {
    let script = base_script().with("optimize", vec![fenced(WRONG)]);
    let provider = Recording::new(script);
    let pipeline = HintPipeline::new(provider.clone(), Sandbox::default());
    let req = request(HintType::Optimization, FIXED, "");
    let hint = pipeline.generate_hint(&req, &question()).unwrap();
    assert_eq!(
        hint.generation_metadata.validation,
        ValidationOutcome::Exhausted { attempts: 3 }
    );
    assert_eq!(hint.generation_metadata.optimized_runtime_secs, None);
    let optimize_calls = provider
        .seen
        .lock()
        .unwrap()
        .iter()
        .filter(|r| r.phase == Phase::Optimize)
        .count();
    assert_eq!(optimize_calls, 3);
    let prompt = provider.hint_prompts().pop().unwrap();
    assert!(!prompt.user.contains(SECTION_OPTIMIZED));
    assert!(!prompt.user.contains(WRONG));
}

#[test]
fn optimization_with_valid_candidate() {
    let script = base_script().with("optimize", vec![fenced(FAST)]);
    let provider = Recording::new(script);
    let pipeline = HintPipeline::new(provider.clone(), Sandbox::default());
    let hint = pipeline
        .generate_hint(&request(HintType::Optimization, FIXED, ""), &question())
        .unwrap();
    assert!(hint.generation_metadata.validation.is_validated());
    assert!(hint.generation_metadata.optimized_runtime_secs.unwrap() > 0.0);
    let prompt = provider.hint_prompts().pop().unwrap();
    assert!(prompt.user.contains(SECTION_OPTIMIZED));
    assert!(prompt.user.contains(FAST));
    assert!(!prompt.user.contains(SECTION_REPAIRED));
}

#[test]
fn debugging_a_passing_program_skips_repair() {
    let provider = Recording::new(base_script());
    let pipeline = HintPipeline::new(provider.clone(), Sandbox::default());
    let req = request(HintType::Debugging, FIXED, "");
    let gathered = pipeline.gather_symbolic_info(&req, &question()).unwrap();
    assert_eq!(gathered.info.buggy_output, PASSED_MARKER);
    assert_eq!(gathered.validation, ValidationOutcome::SkippedProgramPasses);
    let hint = pipeline.generate_hint(&req, &question()).unwrap();
    assert!(!hint.hint_text.is_empty());
    assert!(provider.hint_prompts().pop().unwrap().user.contains(PASSED_MARKER));
}

#[test]
fn provider_offline_fails_generation() {
    let script = MockScript::default().with("hint", vec![ScriptedReply::Failure { error: "offline".into() }]);
    let pipeline = HintPipeline::new(Arc::new(MockProvider::new(script)), Sandbox::default());
    let err = pipeline
        .generate_hint(&request(HintType::Planning, BUGGY, ""), &question())
        .unwrap_err();
    assert!(matches!(err, GenerationError::GenerationFailed(ProviderError::Scripted(_))));
}

#[test]
fn repair_phase_outage_degrades_gracefully() {
    let script = base_script().with("repair", vec![ScriptedReply::Failure { error: "503".into() }]);
    let pipeline = HintPipeline::new(Arc::new(MockProvider::new(script)), Sandbox::default());
    let hint = pipeline
        .generate_hint(&request(HintType::Debugging, BUGGY, ""), &question())
        .unwrap();
    assert!(matches!(
        hint.generation_metadata.validation,
        ValidationOutcome::ProviderFailed { attempts: 1, .. }
    ));
}

#[test]
fn empty_hint_reply_is_retried_then_reported() {
    let script = MockScript::default().with(
        "hint",
        vec![ScriptedReply::Text("HINT:".into()), ScriptedReply::Text(HINT_REPLY.into())],
    );
    let pipeline = HintPipeline::new(Arc::new(MockProvider::new(script)), Sandbox::default());
    let hint = pipeline
        .generate_hint(&request(HintType::Planning, BUGGY, ""), &question())
        .unwrap();
    assert_eq!(hint.generation_metadata.hint_attempts, 2);

    let script = MockScript::default().with("hint", vec![ScriptedReply::Text("HINT:".into())]);
    let pipeline = HintPipeline::new(Arc::new(MockProvider::new(script)), Sandbox::default());
    assert_eq!(
        pipeline
            .generate_hint(&request(HintType::Planning, BUGGY, ""), &question())
            .unwrap_err(),
        GenerationError::EmptyResponse
    );
}

#[test]
fn missing_template_is_reported() {
    let mut templates = Templates::builtin();
    templates.remove("planning");
    let pipeline =
        HintPipeline::new(Arc::new(MockProvider::new(base_script())), Sandbox::default()).with_templates(templates);
    assert_eq!(
        pipeline
            .generate_hint(&request(HintType::Planning, BUGGY, ""), &question())
            .unwrap_err(),
        GenerationError::TemplateMissing("planning".into())
    );
}

#[test]
fn mock_generation_is_reproducible() {
    let script = base_script()
        .with("repair", vec![fenced(WRONG), fenced(FIXED)])
        .with("optimize", vec![fenced(FAST)]);
    let pipeline = HintPipeline::new(Arc::new(MockProvider::new(script)), Sandbox::default());
    for ty in HintType::ALL {
        let req = request(ty, BUGGY, "stuck on the loop");
        let a = pipeline.generate_hint(&req, &question()).unwrap();
        let b = pipeline.generate_hint(&req, &question()).unwrap();
        assert_eq!(a.request, b.request);
        assert_eq!(a.explanation, b.explanation);
        assert_eq!(a.hint_text, b.hint_text);
        let mut ma = a.generation_metadata.clone();
        let mut mb = b.generation_metadata.clone();
        // Measured wall time is the one non-deterministic field.
        assert_eq!(ma.optimized_runtime_secs.is_some(), mb.optimized_runtime_secs.is_some());
        ma.optimized_runtime_secs = None;
        mb.optimized_runtime_secs = None;
        assert_eq!(ma, mb);
        assert_ne!(a.hint_id, b.hint_id);
    }
}
