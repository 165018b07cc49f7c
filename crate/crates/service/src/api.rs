use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use metahint_core::{
    now_millis, HintId, HintRequest, HintType, QuestionId, SessionKey, StudentId, ThumbRating,
};
use metahint_exec::{QuestionSpec, SandboxError};
use metahint_genpipe::{GenerationError, HintPipeline};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use crate::store::{EventStore, StoreError};
use crate::view::{
    hint_type_descriptions, Ack, HintResponse, HintTypeDescription, HintView, QuestionView, RevisitAck,
    SessionView, SubmissionResponse,
};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("consent is required before requesting hints")]
    ConsentRequired,
    #[error("no hints left for this question")]
    QuotaExhausted,
    #[error("unknown question `{0}`")]
    UnknownQuestion(QuestionId),
    #[error("unknown hint `{0}`")]
    UnknownHint(HintId),
    #[error("hint generation failed: {0}")]
    GenerationFailed(String),
    #[error("code execution is unavailable: {0}")]
    SandboxUnavailable(String),
    #[error("storage error: {0}")]
    Storage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "bad_request",
            ApiError::ConsentRequired => "consent_required",
            ApiError::QuotaExhausted => "quota_exhausted",
            ApiError::UnknownQuestion(_) => "unknown_question",
            ApiError::UnknownHint(_) => "unknown_hint",
            ApiError::GenerationFailed(_) => "generation_failed",
            ApiError::SandboxUnavailable(_) => "sandbox_unavailable",
            ApiError::Storage(_) => "storage_error",
            ApiError::Internal(_) => "internal_error",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::ConsentRequired => StatusCode::FORBIDDEN,
            ApiError::QuotaExhausted => StatusCode::TOO_MANY_REQUESTS,
            ApiError::UnknownQuestion(_) | ApiError::UnknownHint(_) => StatusCode::NOT_FOUND,
            ApiError::GenerationFailed(_) => StatusCode::BAD_GATEWAY,
            ApiError::SandboxUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Storage(_) | ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let body = json!({"error": self.code(), "message": self.to_string()});
        (self.status(), Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError::BadRequest(rejection.body_text())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::ConsentRequired => ApiError::ConsentRequired,
            StoreError::QuotaExhausted => ApiError::QuotaExhausted,
            StoreError::UnknownHint(id) => ApiError::UnknownHint(id),
            StoreError::Rejected(e) => ApiError::Internal(format!("event rejected: {e}")),
            other => ApiError::Storage(other.to_string()),
        }
    }
}

impl From<SandboxError> for ApiError {
    fn from(e: SandboxError) -> Self {
        match e {
            SandboxError::Unavailable(m) => ApiError::SandboxUnavailable(m),
            SandboxError::Harness(m) => ApiError::Internal(format!("question harness error: {m}")),
        }
    }
}

impl From<GenerationError> for ApiError {
    fn from(e: GenerationError) -> Self {
        match e {
            GenerationError::Sandbox(e) => e.into(),
            other => ApiError::GenerationFailed(other.to_string()),
        }
    }
}

struct Shared {
    store: Arc<EventStore>,
    questions: BTreeMap<QuestionId, QuestionSpec>,
    pipeline: HintPipeline,
}

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    pub fn new(store: Arc<EventStore>, questions: BTreeMap<QuestionId, QuestionSpec>, pipeline: HintPipeline) -> Self {
        Self {
            shared: Arc::new(Shared {
                store,
                questions,
                pipeline,
            }),
        }
    }

    pub fn store(&self) -> &Arc<EventStore> {
        &self.shared.store
    }

    fn question(&self, id: &QuestionId) -> Result<&QuestionSpec, ApiError> {
        self.shared
            .questions
            .get(id)
            .ok_or_else(|| ApiError::UnknownQuestion(id.clone()))
    }
}

/// Runs blocking work (file appends, sandbox, provider) off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker failed: {e}")))?
}

#[derive(Deserialize)]
struct ConsentBody {
    student_id: StudentId,
}

#[derive(Deserialize)]
struct HintBody {
    student_id: StudentId,
    question_id: QuestionId,
    hint_type: HintType,
    #[serde(default)]
    reflection: String,
    #[serde(default)]
    code: String,
}

#[derive(Deserialize)]
struct RatingBody {
    rating: ThumbRating,
}

#[derive(Deserialize)]
struct SubmissionBody {
    student_id: StudentId,
    question_id: QuestionId,
    code: String,
}

fn hint_id(raw: String) -> Result<HintId, ApiError> {
    HintId::new(raw).map_err(|e| ApiError::BadRequest(e.to_string()))
}

async fn health() -> Json<Ack> {
    Json(Ack { ok: true })
}

async fn post_consent(State(app): State<AppState>, body: Result<Json<ConsentBody>, JsonRejection>) -> Result<Json<Ack>, ApiError> {
    let Json(body) = body?;
    let store = Arc::clone(app.store());
    blocking(move || Ok(store.give_consent(&body.student_id)?)).await?;
    Ok(Json(Ack { ok: true }))
}

async fn post_hint(
    State(app): State<AppState>,
    body: Result<Json<HintBody>, JsonRejection>,
) -> Result<Json<HintResponse>, ApiError> {
    let Json(body) = body?;
    let question = app.question(&body.question_id)?.clone();
    let request = HintRequest {
        student_id: body.student_id,
        question_id: body.question_id,
        hint_type: body.hint_type,
        reflection: body.reflection,
        code_snapshot: body.code,
        requested_at: now_millis(),
    };
    let store = Arc::clone(app.store());
    let pipeline = app.shared.pipeline.clone();
    let (hint, remaining_quota) = blocking(move || {
        let reservation = store.begin_hint(request)?;
        // On failure the reservation is dropped and its quota returned.
        let hint = pipeline.generate_hint(reservation.request(), &question).map_err(|e| {
            tracing::warn!(error = %e, "hint generation failed");
            ApiError::from(e)
        })?;
        Ok(reservation.deliver(hint)?)
    })
    .await?;
    Ok(Json(HintResponse {
        hint: HintView::new(&hint, 0, Default::default(), false),
        remaining_quota,
    }))
}

async fn post_rating(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<RatingBody>, JsonRejection>,
) -> Result<Json<Ack>, ApiError> {
    let id = hint_id(id)?;
    let Json(body) = body?;
    let store = Arc::clone(app.store());
    blocking(move || Ok(store.rate(&id, body.rating)?)).await?;
    Ok(Json(Ack { ok: true }))
}

async fn post_revisit(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<RevisitAck>, ApiError> {
    let id = hint_id(id)?;
    let store = Arc::clone(app.store());
    let (_, revisit_count) = blocking(move || Ok(store.revisit(&id)?)).await?;
    Ok(Json(RevisitAck {
        ok: true,
        revisit_count,
    }))
}

async fn post_submission(
    State(app): State<AppState>,
    body: Result<Json<SubmissionBody>, JsonRejection>,
) -> Result<Json<SubmissionResponse>, ApiError> {
    let Json(body) = body?;
    let question = app.question(&body.question_id)?.clone();
    let store = Arc::clone(app.store());
    let sandbox = app.shared.pipeline.sandbox().clone();
    let key = SessionKey::new(body.student_id, body.question_id);
    blocking(move || {
        let outcome = sandbox.run_against_harness(&body.code, &question)?;
        let score = outcome.score();
        let session = store.submit(&key, score, outcome.tests_passed, outcome.tests_total)?;
        Ok(Json(SubmissionResponse {
            score,
            solved: session.solved,
            best_score: session.best_score().unwrap_or(score),
            tests_passed: outcome.tests_passed,
            tests_total: outcome.tests_total,
            status: outcome.status,
        }))
    })
    .await
}

async fn get_session(
    State(app): State<AppState>,
    Path((student, question)): Path<(String, String)>,
) -> Result<Json<SessionView>, ApiError> {
    let student = StudentId::new(student).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let question = QuestionId::new(question).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let key = SessionKey::new(student, question);
    let store = app.store();
    Ok(Json(SessionView::project(&store.session(&key), &store.policy())))
}

async fn get_questions(State(app): State<AppState>) -> Json<Vec<QuestionView>> {
    Json(app.shared.questions.values().map(QuestionView::from).collect())
}

async fn get_hint_type_descriptions() -> Json<Vec<HintTypeDescription>> {
    Json(hint_type_descriptions())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/consent", post(post_consent))
        .route("/api/hints", post(post_hint))
        .route("/api/hints/{id}/rating", post(post_rating))
        .route("/api/hints/{id}/revisit", post(post_revisit))
        .route("/api/submissions", post(post_submission))
        .route("/api/sessions/{student}/{question}", get(get_session))
        .route("/api/questions", get(get_questions))
        .route("/api/hint-type-descriptions", get(get_hint_type_descriptions))
        .with_state(state)
}
