#![allow(dead_code)]

use chrono::TimeDelta;
use metahint_core::{
    Event, EventBody, GenerationMetadata, Hint, HintId, HintRequest, HintType, QuestionId, StudentId, ThumbRating,
    Timestamp, ValidationOutcome,
};

/// Appends events with increasing seq; time advances one second per event
/// unless set explicitly.
pub struct LogBuilder {
    pub events: Vec<Event>,
    pub now: Timestamp,
    hints: usize,
}

impl Default for LogBuilder {
    fn default() -> Self {
        Self {
            events: Vec::new(),
            now: "2025-01-06T09:00:00Z".parse().unwrap(),
            hints: 0,
        }
    }
}

fn sid(s: &str) -> StudentId {
    StudentId::new(s).unwrap()
}

fn qid(q: &str) -> QuestionId {
    QuestionId::new(q).unwrap()
}

impl LogBuilder {
    fn push(&mut self, body: EventBody) {
        let seq = self.events.len() as u64;
        self.events.push(Event::new(seq, self.now, body));
        self.now += TimeDelta::seconds(1);
    }

    pub fn advance(&mut self, secs: i64) -> &mut Self {
        self.now += TimeDelta::seconds(secs);
        self
    }

    pub fn consent(&mut self, s: &str) -> &mut Self {
        self.push(EventBody::ConsentGiven { student_id: sid(s) });
        self
    }

    fn request_body(&self, s: &str, q: &str, t: HintType) -> HintRequest {
        HintRequest {
            student_id: sid(s),
            question_id: qid(q),
            hint_type: t,
            reflection: String::new(),
            code_snapshot: String::new(),
            requested_at: self.now,
        }
    }

    /// Request plus delivery; returns the hint id.
    pub fn hint(&mut self, s: &str, q: &str, t: HintType) -> HintId {
        let req = self.request_body(s, q, t);
        self.push(EventBody::HintRequested(req.clone()));
        self.hints += 1;
        let hint_id = HintId::new(format!("h{}", self.hints)).unwrap();
        self.push(EventBody::HintDelivered(Hint {
            hint_id: hint_id.clone(),
            request: req,
            explanation: String::new(),
            hint_text: "hint".into(),
            delivered_at: self.now,
            generation_metadata: GenerationMetadata {
                provider: "test".into(),
                model: "test".into(),
                candidate_attempts: 0,
                hint_attempts: 1,
                validation: ValidationOutcome::NotApplicable,
                optimized_runtime_secs: None,
            },
        }));
        hint_id
    }

    pub fn submit(&mut self, s: &str, q: &str, score: f64) -> &mut Self {
        self.push(EventBody::SubmissionMade {
            student_id: sid(s),
            question_id: qid(q),
            score,
            tests_passed: 0,
            tests_total: 0,
        });
        self
    }

    pub fn revisit(&mut self, s: &str, q: &str, h: &HintId) -> &mut Self {
        self.push(EventBody::HintRevisited {
            student_id: sid(s),
            question_id: qid(q),
            hint_id: h.clone(),
        });
        self
    }

    pub fn rate(&mut self, s: &str, q: &str, h: &HintId, up: bool) -> &mut Self {
        self.push(EventBody::HintRated {
            student_id: sid(s),
            question_id: qid(q),
            hint_id: h.clone(),
            rating: if up { ThumbRating::Up } else { ThumbRating::Down },
        });
        self
    }
}
