//! Append-only telemetry events.
//!
//! On disk every event is one line of JSON:
//!
//! ```json
//! {"seq":7,"at":"2025-01-06T10:00:00.000Z","kind":"HintRevisited","payload":{...}}
//! ```

use serde::{Deserialize, Serialize};

use crate::types::{Hint, HintId, HintRequest, QuestionId, SessionKey, StudentId, ThumbRating, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at: Timestamp,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventBody {
    /// Consent is per student and covers all of their sessions.
    ConsentGiven { student_id: StudentId },
    HintRequested(HintRequest),
    HintDelivered(Hint),
    HintRevisited {
        student_id: StudentId,
        question_id: QuestionId,
        hint_id: HintId,
    },
    HintRated {
        student_id: StudentId,
        question_id: QuestionId,
        hint_id: HintId,
        rating: ThumbRating,
    },
    SubmissionMade {
        student_id: StudentId,
        question_id: QuestionId,
        /// Fraction of harness tests passed, in [0, 1].
        score: f64,
        #[serde(default)]
        tests_passed: u32,
        #[serde(default)]
        tests_total: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    ConsentGiven,
    HintRequested,
    HintDelivered,
    HintRevisited,
    HintRated,
    SubmissionMade,
}

impl EventBody {
    pub fn kind(&self) -> EventKind {
        match self {
            EventBody::ConsentGiven { .. } => EventKind::ConsentGiven,
            EventBody::HintRequested(_) => EventKind::HintRequested,
            EventBody::HintDelivered(_) => EventKind::HintDelivered,
            EventBody::HintRevisited { .. } => EventKind::HintRevisited,
            EventBody::HintRated { .. } => EventKind::HintRated,
            EventBody::SubmissionMade { .. } => EventKind::SubmissionMade,
        }
    }

    pub fn student_id(&self) -> &StudentId {
        match self {
            EventBody::ConsentGiven { student_id }
            | EventBody::HintRevisited { student_id, .. }
            | EventBody::HintRated { student_id, .. }
            | EventBody::SubmissionMade { student_id, .. } => student_id,
            EventBody::HintRequested(req) => &req.student_id,
            EventBody::HintDelivered(hint) => &hint.request.student_id,
        }
    }

    /// The session this event belongs to; `None` for student-wide events.
    pub fn session_key(&self) -> Option<SessionKey> {
        let question_id = match self {
            EventBody::ConsentGiven { .. } => return None,
            EventBody::HintRequested(req) => &req.question_id,
            EventBody::HintDelivered(hint) => &hint.request.question_id,
            EventBody::HintRevisited { question_id, .. }
            | EventBody::HintRated { question_id, .. }
            | EventBody::SubmissionMade { question_id, .. } => question_id,
        };
        Some(SessionKey::new(self.student_id().clone(), question_id.clone()))
    }
}

impl Event {
    pub fn new(seq: u64, at: Timestamp, body: EventBody) -> Self {
        Self { seq, at, body }
    }

    pub fn kind(&self) -> EventKind {
        self.body.kind()
    }

    /// Time of the action the event records. For hint requests this is the
    /// request time carried in the payload; otherwise the append time.
    pub fn action_time(&self) -> Timestamp {
        match &self.body {
            EventBody::HintRequested(req) => req.requested_at,
            EventBody::HintDelivered(hint) => hint.delivered_at,
            _ => self.at,
        }
    }
}
