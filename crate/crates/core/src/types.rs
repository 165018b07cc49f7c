use std::fmt;

use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// UTC timestamp. Values produced by this crate are truncated to milliseconds.
pub type Timestamp = DateTime<Utc>;

/// Current wall-clock time truncated to millisecond precision.
pub fn now_millis() -> Timestamp {
    truncate_millis(Utc::now())
}

pub(crate) fn truncate_millis(t: Timestamp) -> Timestamp {
    t.duration_trunc(TimeDelta::milliseconds(1)).unwrap_or(t)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} must not be empty")]
pub struct EmptyIdError {
    kind: &'static str,
}

macro_rules! opaque_id {
    ($(#[$meta:meta])* $name:ident, $label:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Result<Self, EmptyIdError> {
                let value = value.into();
                if value.trim().is_empty() {
                    return Err(EmptyIdError { kind: $label });
                }
                Ok(Self(value))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = EmptyIdError;

            fn try_from(value: String) -> Result<Self, Self::Error> {
                Self::new(value)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

opaque_id!(
    /// Opaque student identifier issued upstream.
    StudentId,
    "student id"
);
opaque_id!(
    /// Opaque question identifier.
    QuestionId,
    "question id"
);
opaque_id!(AssignmentId, "assignment id");
opaque_id!(
    /// Identifier of a delivered hint.
    HintId,
    "hint id"
);

/// Key of one session: a student working on one question.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionKey {
    pub student_id: StudentId,
    pub question_id: QuestionId,
}

impl SessionKey {
    pub fn new(student_id: StudentId, question_id: QuestionId) -> Self {
        Self {
            student_id,
            question_id,
        }
    }
}

impl fmt::Display for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.student_id, self.question_id)
    }
}

/// The three metacognitive hint kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HintType {
    Planning,
    Debugging,
    Optimization,
}

impl HintType {
    pub const ALL: [HintType; 3] = [HintType::Planning, HintType::Debugging, HintType::Optimization];

    pub fn as_str(self) -> &'static str {
        match self {
            HintType::Planning => "planning",
            HintType::Debugging => "debugging",
            HintType::Optimization => "optimization",
        }
    }

    /// Single-letter code used in sequence exports (P, D, O).
    pub fn letter(self) -> char {
        match self {
            HintType::Planning => 'P',
            HintType::Debugging => 'D',
            HintType::Optimization => 'O',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'P' => Some(HintType::Planning),
            'D' => Some(HintType::Debugging),
            'O' => Some(HintType::Optimization),
            _ => None,
        }
    }

    /// Description shown to students next to the hint buttons.
    pub fn description(self) -> &'static str {
        match self {
            HintType::Planning => {
                "A hint aimed at helping you to identify the steps needed to solve the question."
            }
            HintType::Debugging => {
                "A hint aimed at helping you to identify and fix a bug in your current program."
            }
            HintType::Optimization => {
                "A hint aimed at helping you to optimize your current program for better performance and readability."
            }
        }
    }

    pub fn index(self) -> usize {
        match self {
            HintType::Planning => 0,
            HintType::Debugging => 1,
            HintType::Optimization => 2,
        }
    }
}

impl fmt::Display for HintType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for HintType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "planning" | "p" => Ok(HintType::Planning),
            "debugging" | "d" => Ok(HintType::Debugging),
            "optimization" | "o" => Ok(HintType::Optimization),
            other => Err(format!("unknown hint type `{other}`")),
        }
    }
}

/// A thumb rating as submitted by a student. Only two values exist on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThumbRating {
    Up,
    Down,
}

/// Rating state of a delivered hint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rating {
    Up,
    Down,
    #[default]
    Unrated,
}

impl From<ThumbRating> for Rating {
    fn from(r: ThumbRating) -> Self {
        match r {
            ThumbRating::Up => Rating::Up,
            ThumbRating::Down => Rating::Down,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("max_hints_per_question must be at least 1")]
pub struct InvalidQuota;

/// Per-question hint quota.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawQuota")]
pub struct QuotaPolicy {
    max_hints_per_question: u32,
}

#[derive(Deserialize)]
struct RawQuota {
    max_hints_per_question: u32,
}

impl TryFrom<RawQuota> for QuotaPolicy {
    type Error = InvalidQuota;

    fn try_from(raw: RawQuota) -> Result<Self, Self::Error> {
        QuotaPolicy::new(raw.max_hints_per_question)
    }
}

impl QuotaPolicy {
    pub const DEFAULT_MAX_HINTS: u32 = 5;

    pub fn new(max_hints_per_question: u32) -> Result<Self, InvalidQuota> {
        if max_hints_per_question == 0 {
            return Err(InvalidQuota);
        }
        Ok(Self {
            max_hints_per_question,
        })
    }

    pub fn max_hints_per_question(&self) -> u32 {
        self.max_hints_per_question
    }
}

impl Default for QuotaPolicy {
    fn default() -> Self {
        Self {
            max_hints_per_question: Self::DEFAULT_MAX_HINTS,
        }
    }
}

/// A student's request for a hint, including the code and reflection at request time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintRequest {
    pub student_id: StudentId,
    pub question_id: QuestionId,
    pub hint_type: HintType,
    #[serde(default)]
    pub reflection: String,
    pub code_snapshot: String,
    pub requested_at: Timestamp,
}

impl HintRequest {
    pub fn session_key(&self) -> SessionKey {
        SessionKey::new(self.student_id.clone(), self.question_id.clone())
    }
}

/// How the symbolic candidate (repaired or optimized program) fared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ValidationOutcome {
    /// Planning hints use no candidate program.
    NotApplicable,
    /// The student program already passes; there was nothing to repair.
    SkippedProgramPasses,
    /// A candidate passed the harness on the given attempt.
    Validated { attempts: u32 },
    /// Every attempt produced a candidate that failed validation.
    Exhausted { attempts: u32 },
    /// The provider failed before a valid candidate was found.
    ProviderFailed { attempts: u32, error: String },
}

impl ValidationOutcome {
    pub fn attempts(&self) -> u32 {
        match self {
            ValidationOutcome::NotApplicable | ValidationOutcome::SkippedProgramPasses => 0,
            ValidationOutcome::Validated { attempts }
            | ValidationOutcome::Exhausted { attempts }
            | ValidationOutcome::ProviderFailed { attempts, .. } => *attempts,
        }
    }

    pub fn is_validated(&self) -> bool {
        matches!(self, ValidationOutcome::Validated { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetadata {
    pub provider: String,
    pub model: String,
    /// Candidate-program attempts in the symbolic phase.
    pub candidate_attempts: u32,
    /// Provider calls needed to obtain a parseable hint.
    pub hint_attempts: u32,
    pub validation: ValidationOutcome,
    /// Median runtime of the accepted optimized program, when measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimized_runtime_secs: Option<f64>,
}

/// A generated hint. `explanation` is internal reasoning and never leaves the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hint {
    pub hint_id: HintId,
    pub request: HintRequest,
    pub explanation: String,
    pub hint_text: String,
    pub delivered_at: Timestamp,
    pub generation_metadata: GenerationMetadata,
}

impl Hint {
    pub fn hint_type(&self) -> HintType {
        self.request.hint_type
    }

    pub fn session_key(&self) -> SessionKey {
        self.request.session_key()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hint_type_tags_are_stable() {
        let tags: Vec<String> = HintType::ALL
            .iter()
            .map(|t| serde_json::to_string(t).unwrap())
            .collect();
        assert_eq!(tags, ["\"planning\"", "\"debugging\"", "\"optimization\""]);
    }

    #[test]
    fn empty_ids_are_rejected() {
        assert!(StudentId::new("").is_err());
        assert!(QuestionId::new("   ").is_err());
        assert!(serde_json::from_str::<StudentId>("\"\"").is_err());
        assert_eq!(StudentId::new("s1").unwrap().as_str(), "s1");
    }

    #[test]
    fn quota_must_be_positive() {
        assert!(QuotaPolicy::new(0).is_err());
        assert_eq!(QuotaPolicy::default().max_hints_per_question(), 5);
        let bad: Result<QuotaPolicy, _> = serde_json::from_str(r#"{"max_hints_per_question":0}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn timestamps_are_millisecond_precise() {
        let t = now_millis();
        assert_eq!(t.timestamp_subsec_nanos() % 1_000_000, 0);
    }
}
