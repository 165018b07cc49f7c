//! Student-facing projections. None of these carry explanations, generation
//! metadata, or candidate programs.

use metahint_core::{
    check_quota, AssignmentId, Hint, HintId, HintType, QuestionId, QuotaPolicy, Rating, SessionState, StudentId,
    Timestamp,
};
use metahint_exec::{ExecStatus, QuestionSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintView {
    pub hint_id: HintId,
    pub hint_type: HintType,
    pub hint_text: String,
    pub reflection: String,
    pub requested_at: Timestamp,
    pub delivered_at: Timestamp,
    pub revisit_count: u32,
    pub rating: Rating,
    /// Previous hints are shown collapsed until the student expands them.
    pub collapsed: bool,
}

impl HintView {
    pub fn new(hint: &Hint, revisit_count: u32, rating: Rating, collapsed: bool) -> Self {
        Self {
            hint_id: hint.hint_id.clone(),
            hint_type: hint.hint_type(),
            hint_text: hint.hint_text.clone(),
            reflection: hint.request.reflection.clone(),
            requested_at: hint.request.requested_at,
            delivered_at: hint.delivered_at,
            revisit_count,
            rating,
            collapsed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub student_id: StudentId,
    pub question_id: QuestionId,
    pub consent_given: bool,
    pub max_hints: u32,
    pub remaining_quota: u32,
    /// In delivery order.
    pub hints: Vec<HintView>,
    pub submission_count: usize,
    pub best_score: Option<f64>,
    pub solved: bool,
}

impl SessionView {
    pub fn project(state: &SessionState, policy: &QuotaPolicy) -> Self {
        let hints = state
            .hints
            .iter()
            .map(|h| {
                HintView::new(
                    h,
                    state.revisit_count_per_hint.get(&h.hint_id).copied().unwrap_or(0),
                    state.ratings.get(&h.hint_id).copied().unwrap_or_default(),
                    true,
                )
            })
            .collect();
        Self {
            student_id: state.student_id.clone(),
            question_id: state.question_id.clone(),
            consent_given: state.consent_given,
            max_hints: policy.max_hints_per_question(),
            remaining_quota: check_quota(state, policy),
            hints,
            submission_count: state.submissions.len(),
            best_score: state.best_score(),
            solved: state.solved,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintResponse {
    pub hint: HintView,
    pub remaining_quota: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionResponse {
    pub score: f64,
    pub solved: bool,
    pub best_score: f64,
    pub tests_passed: u32,
    pub tests_total: u32,
    pub status: ExecStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub question_id: QuestionId,
    pub assignment_id: AssignmentId,
    pub prompt_text: String,
    pub starter_code: String,
}

impl From<&QuestionSpec> for QuestionView {
    fn from(q: &QuestionSpec) -> Self {
        Self {
            question_id: q.question_id.clone(),
            assignment_id: q.assignment_id.clone(),
            prompt_text: q.prompt_text.clone(),
            starter_code: q.starter_code.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintTypeDescription {
    pub hint_type: HintType,
    pub label: String,
    pub description: String,
}

pub fn hint_type_descriptions() -> Vec<HintTypeDescription> {
    HintType::ALL
        .iter()
        .map(|&t| {
            let name = t.as_str();
            HintTypeDescription {
                hint_type: t,
                label: name[..1].to_uppercase() + &name[1..],
                description: t.description().to_string(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisitAck {
    pub ok: bool,
    pub revisit_count: u32,
}
