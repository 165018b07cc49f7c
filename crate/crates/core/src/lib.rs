//! Shared domain model for the metacognitive hint service.
//!
//! Everything that the service, the generation pipeline and the analytics
//! toolkit agree on lives here: identifiers, hint types, the quota policy,
//! the telemetry [`Event`] union and the per-(student, question)
//! [`SessionState`] that is rebuilt by folding events in `seq` order.

pub mod event;
pub mod log;
pub mod replay;
pub mod session;
pub mod types;

pub use event::{Event, EventBody, EventKind};
pub use log::{read_log, read_log_from, write_log, EventLogWriter, LogError};
pub use replay::{LogState, Prepared, ReplayError};
pub use session::{check_quota, SessionError, SessionState, Submission};
pub use types::{
    now_millis, AssignmentId, GenerationMetadata, Hint, HintId, HintRequest, HintType,
    QuestionId, QuotaPolicy, Rating, SessionKey, StudentId, ThumbRating, Timestamp,
    ValidationOutcome,
};
