//! HTTP service: consent gating, atomic hint quotas, and an append-only event log.

mod api;
mod config;
mod store;
mod view;

use std::sync::Arc;

use metahint_exec::{load_questions_dir, QuestionError, Sandbox};
use metahint_genpipe::{HintPipeline, ProviderError, Templates};
use thiserror::Error;

pub use api::{router, ApiError, AppState};
pub use config::{ApiConfig, ConfigError};
pub use store::{Clock, EventStore, Reservation, StoreError};
pub use view::{
    hint_type_descriptions, Ack, HintResponse, HintTypeDescription, HintView, QuestionView, RevisitAck,
    SessionView, SubmissionResponse,
};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Questions(#[from] QuestionError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

/// Loads questions, replays the event log, and wires the pipeline.
pub fn build_state(config: &ApiConfig) -> Result<AppState, ServiceError> {
    let questions = load_questions_dir(&config.questions_dir)?;
    if let Some(parent) = config.event_log_path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| ServiceError::Io {
            context: format!("create {}", parent.display()),
            source,
        })?;
    }
    let store = Arc::new(EventStore::open(&config.event_log_path, config.quota)?);
    let sandbox = Sandbox::new(config.sandbox.clone());
    if let Err(e) = sandbox.probe() {
        tracing::warn!(error = %e, "sandbox probe failed; submissions and hints will be unavailable");
    }
    let templates = match &config.templates_dir {
        Some(dir) => Templates::from_dir(dir).map_err(|source| ServiceError::Io {
            context: format!("read templates from {}", dir.display()),
            source,
        })?,
        None => Templates::builtin(),
    };
    let pipeline = HintPipeline::new(config.provider.build()?, sandbox)
        .with_templates(templates)
        .with_config(config.pipeline.clone());
    tracing::info!(questions = questions.len(), "service state ready");
    Ok(AppState::new(store, questions, pipeline))
}

/// Serves until ctrl-c.
pub async fn serve(config: ApiConfig) -> Result<(), ServiceError> {
    let state = build_state(&config)?;
    let listener = tokio::net::TcpListener::bind(config.listen_address)
        .await
        .map_err(|source| ServiceError::Io {
            context: format!("bind {}", config.listen_address),
            source,
        })?;
    tracing::info!(address = %config.listen_address, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| ServiceError::Io {
            context: "serve".into(),
            source,
        })
}
