use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Event, EventBody};
use crate::types::{
    Hint, HintId, QuestionId, QuotaPolicy, Rating, SessionKey, StudentId, Timestamp,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("event for {got} applied to session {expected}")]
    WrongSession { expected: SessionKey, got: String },
    #[error("hint event before consent was given")]
    ConsentMissing,
    #[error("hint quota of {max} already used")]
    QuotaExceeded { max: u32 },
    #[error("event seq {got} is not greater than last applied seq {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error("unknown hint `{0}`")]
    UnknownHint(HintId),
    #[error("hint `{0}` was already delivered")]
    DuplicateHint(HintId),
    #[error("delivered hint has empty text")]
    EmptyHint,
    #[error("submission score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("timestamp {got} precedes the previous action at {previous}")]
    NonMonotoneTime { previous: Timestamp, got: Timestamp },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub at: Timestamp,
    pub score: f64,
}

/// Everything known about one student working on one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub student_id: StudentId,
    pub question_id: QuestionId,
    pub consent_given: bool,
    pub hints: Vec<Hint>,
    pub revisit_count_per_hint: BTreeMap<HintId, u32>,
    pub ratings: BTreeMap<HintId, Rating>,
    pub submissions: Vec<Submission>,
    pub solved: bool,
    pub last_seq: Option<u64>,
    last_requested_at: Option<Timestamp>,
}

/// Remaining hints for a session, floored at zero.
pub fn check_quota(state: &SessionState, policy: &QuotaPolicy) -> u32 {
    let used = u32::try_from(state.hints.len()).unwrap_or(u32::MAX);
    policy.max_hints_per_question().saturating_sub(used)
}

impl SessionState {
    pub fn new(student_id: StudentId, question_id: QuestionId) -> Self {
        Self {
            student_id,
            question_id,
            consent_given: false,
            hints: Vec::new(),
            revisit_count_per_hint: BTreeMap::new(),
            ratings: BTreeMap::new(),
            submissions: Vec::new(),
            solved: false,
            last_seq: None,
            last_requested_at: None,
        }
    }

    pub fn for_key(key: &SessionKey) -> Self {
        Self::new(key.student_id.clone(), key.question_id.clone())
    }

    pub fn key(&self) -> SessionKey {
        SessionKey::new(self.student_id.clone(), self.question_id.clone())
    }

    pub fn hint(&self, hint_id: &HintId) -> Option<&Hint> {
        self.hints.iter().find(|h| &h.hint_id == hint_id)
    }

    pub fn best_score(&self) -> Option<f64> {
        self.submissions.iter().map(|s| s.score).fold(None, |best, s| {
            Some(best.map_or(s, |b: f64| b.max(s)))
        })
    }

    /// Returns the state after `event`, leaving `self` untouched on error.
    pub fn apply_event(&self, event: &Event, policy: &QuotaPolicy) -> Result<SessionState, SessionError> {
        let mut next = self.clone();
        next.apply_in_place(event, policy)?;
        Ok(next)
    }

    /// Applies `event` in place. Every check runs before the first mutation,
    /// so a rejected event leaves the state unchanged.
    pub fn apply_in_place(&mut self, event: &Event, policy: &QuotaPolicy) -> Result<(), SessionError> {
        if let Some(last) = self.last_seq {
            if event.seq <= last {
                return Err(SessionError::OutOfOrder { last, got: event.seq });
            }
        }
        if event.body.student_id() != &self.student_id {
            return Err(self.wrong_session(event));
        }
        if let Some(key) = event.body.session_key() {
            if key.question_id != self.question_id {
                return Err(self.wrong_session(event));
            }
        }

        match &event.body {
            EventBody::ConsentGiven { .. } => {
                self.consent_given = true;
            }
            EventBody::HintRequested(req) => {
                self.require_consent()?;
                self.check_request_time(req.requested_at)?;
                self.last_requested_at = Some(req.requested_at);
            }
            EventBody::HintDelivered(hint) => {
                self.require_consent()?;
                if check_quota(self, policy) == 0 {
                    return Err(SessionError::QuotaExceeded {
                        max: policy.max_hints_per_question(),
                    });
                }
                if self.ratings.contains_key(&hint.hint_id) {
                    return Err(SessionError::DuplicateHint(hint.hint_id.clone()));
                }
                if hint.hint_text.trim().is_empty() {
                    return Err(SessionError::EmptyHint);
                }
                if let Some(prev) = self.hints.last() {
                    if hint.delivered_at < prev.delivered_at {
                        return Err(SessionError::NonMonotoneTime {
                            previous: prev.delivered_at,
                            got: hint.delivered_at,
                        });
                    }
                }
                // Deliveries may finish out of request order, so only the
                // request/delivery pair itself is checked.
                if hint.delivered_at < hint.request.requested_at {
                    return Err(SessionError::NonMonotoneTime {
                        previous: hint.request.requested_at,
                        got: hint.delivered_at,
                    });
                }
                self.revisit_count_per_hint.insert(hint.hint_id.clone(), 0);
                self.ratings.insert(hint.hint_id.clone(), Rating::Unrated);
                self.hints.push(hint.clone());
            }
            EventBody::HintRevisited { hint_id, .. } => {
                let count = self
                    .revisit_count_per_hint
                    .get_mut(hint_id)
                    .ok_or_else(|| SessionError::UnknownHint(hint_id.clone()))?;
                *count += 1;
            }
            EventBody::HintRated { hint_id, rating, .. } => {
                let slot = self
                    .ratings
                    .get_mut(hint_id)
                    .ok_or_else(|| SessionError::UnknownHint(hint_id.clone()))?;
                *slot = Rating::from(*rating);
            }
            EventBody::SubmissionMade { score, .. } => {
                if !score.is_finite() || !(0.0..=1.0).contains(score) {
                    return Err(SessionError::InvalidScore(*score));
                }
                self.submissions.push(Submission {
                    at: event.at,
                    score: *score,
                });
                self.solved = self.submissions.iter().any(|s| s.score == 1.0);
            }
        }
        self.last_seq = Some(event.seq);
        Ok(())
    }

    fn require_consent(&self) -> Result<(), SessionError> {
        if self.consent_given {
            Ok(())
        } else {
            Err(SessionError::ConsentMissing)
        }
    }

    fn check_request_time(&self, at: Timestamp) -> Result<(), SessionError> {
        match self.last_requested_at {
            Some(previous) if at < previous => Err(SessionError::NonMonotoneTime { previous, got: at }),
            _ => Ok(()),
        }
    }

    fn wrong_session(&self, event: &Event) -> SessionError {
        let got = match event.body.session_key() {
            Some(key) => key.to_string(),
            None => event.body.student_id().to_string(),
        };
        SessionError::WrongSession {
            expected: self.key(),
            got,
        }
    }
}
