//! Seeded synthetic cohorts for end-to-end runs.

use std::path::Path;

use chrono::{TimeDelta, TimeZone, Utc};
use metahint_core::{
    check_quota, Event, EventBody, GenerationMetadata, Hint, HintId, HintRequest, HintType, LogState, QuestionId,
    QuotaPolicy, ReplayError, SessionKey, StudentId, ThumbRating, ValidationOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid simulation spec: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("generated event rejected: {0}")]
    Replay(#[from] ReplayError),
}

/// Chance per work step of asking for each hint type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propensities {
    pub planning: f64,
    pub debugging: f64,
    pub optimization: f64,
}

impl Propensities {
    fn get(&self, t: HintType) -> f64 {
        match t {
            HintType::Planning => self.planning,
            HintType::Debugging => self.debugging,
            HintType::Optimization => self.optimization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub n_students: usize,
    pub n_questions: usize,
    pub seed: u64,
    pub request_propensity: Propensities,
    /// Chance that a submission solves the question, without and with prior hints.
    pub solve_probability_without_hints: f64,
    pub solve_probability_with_hints: f64,
    #[serde(default = "default_consent")]
    pub consent_probability: f64,
    #[serde(default = "default_steps")]
    pub max_steps_per_question: usize,
    #[serde(default = "default_quota")]
    pub max_hints_per_question: u32,
    #[serde(default = "default_engagement")]
    pub revisit_probability: f64,
    #[serde(default = "default_engagement")]
    pub rating_probability: f64,
}

fn default_consent() -> f64 {
    0.8
}
fn default_steps() -> usize {
    6
}
fn default_quota() -> u32 {
    QuotaPolicy::DEFAULT_MAX_HINTS
}
fn default_engagement() -> f64 {
    0.3
}

impl SimulationSpec {
    pub fn load(path: &Path) -> Result<Self, SimulationError> {
        let read_err = |message: String| SimulationError::Read {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let spec: Self = toml::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let probs = [
            ("request_propensity.planning", self.request_propensity.planning),
            ("request_propensity.debugging", self.request_propensity.debugging),
            ("request_propensity.optimization", self.request_propensity.optimization),
            ("solve_probability_without_hints", self.solve_probability_without_hints),
            ("solve_probability_with_hints", self.solve_probability_with_hints),
            ("consent_probability", self.consent_probability),
            ("revisit_probability", self.revisit_probability),
            ("rating_probability", self.rating_probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimulationError::Invalid(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        if self.n_students == 0 || self.n_questions == 0 {
            return Err(SimulationError::Invalid("n_students and n_questions must be positive".into()));
        }
        if self.max_steps_per_question == 0 {
            return Err(SimulationError::Invalid("max_steps_per_question must be positive".into()));
        }
        QuotaPolicy::new(self.max_hints_per_question).map_err(|e| SimulationError::Invalid(e.to_string()))?;
        Ok(())
    }
}

struct Sim {
    state: LogState,
    events: Vec<Event>,
    now: chrono::DateTime<Utc>,
    hints: usize,
}

impl Sim {
    fn emit(&mut self, body: EventBody) -> Result<(), SimulationError> {
        let event = Event::new(self.events.len() as u64, self.now, body);
        self.state.apply(&event)?;
        self.events.push(event);
        Ok(())
    }

    fn tick(&mut self, rng: &mut ChaCha8Rng, max_secs: i64) {
        self.now += TimeDelta::seconds(rng.random_range(1..=max_secs));
    }
}

/// Every event is replayed through [`LogState`] as it is generated, so the
/// output satisfies the consent and quota rules by construction.
pub fn simulate(spec: &SimulationSpec) -> Result<Vec<Event>, SimulationError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let policy = QuotaPolicy::new(spec.max_hints_per_question).expect("validated");
    let mut sim = Sim {
        state: LogState::new(policy),
        events: Vec::new(),
        now: Utc.with_ymd_and_hms(2025, 1, 6, 9, 0, 0).single().expect("valid date"),
        hints: 0,
    };

    let students: Vec<StudentId> = (0..spec.n_students).map(|i| StudentId::new(format!("sim-s{:03}", i + 1)).expect("non-empty")).collect();
    let questions: Vec<QuestionId> = (0..spec.n_questions).map(|i| QuestionId::new(format!("sim-q{:02}", i + 1)).expect("non-empty")).collect();

    for s in &students {
        if rng.random_bool(spec.consent_probability) {
            sim.emit(EventBody::ConsentGiven { student_id: s.clone() })?;
            sim.tick(&mut rng, 30);
        }
    }

    for q in &questions {
        for s in &students {
            let key = SessionKey::new(s.clone(), q.clone());
            let mut used_hint = false;
            let mut delivered: Vec<HintId> = Vec::new();
            for _ in 0..spec.max_steps_per_question {
                for t in HintType::ALL {
                    let session = sim.state.session_or_empty(&key);
                    if !session.consent_given || check_quota(&session, &policy) == 0 {
                        break;
                    }
                    if !rng.random_bool(spec.request_propensity.get(t)) {
                        continue;
                    }
                    let request = HintRequest {
                        student_id: s.clone(),
                        question_id: q.clone(),
                        hint_type: t,
                        reflection: String::new(),
                        code_snapshot: String::new(),
                        requested_at: sim.now,
                    };
                    sim.emit(EventBody::HintRequested(request.clone()))?;
                    sim.tick(&mut rng, 20);
                    sim.hints += 1;
                    let hint_id = HintId::new(format!("sim-h{:05}", sim.hints)).expect("non-empty");
                    sim.emit(EventBody::HintDelivered(Hint {
                        hint_id: hint_id.clone(),
                        request,
                        explanation: "simulated".into(),
                        hint_text: format!("simulated {} hint", t.as_str()),
                        delivered_at: sim.now,
                        generation_metadata: GenerationMetadata {
                            provider: "simulation".into(),
                            model: "none".into(),
                            candidate_attempts: 0,
                            hint_attempts: 1,
                            validation: ValidationOutcome::NotApplicable,
                            optimized_runtime_secs: None,
                        },
                    }))?;
                    delivered.push(hint_id);
                    used_hint = true;
                    sim.tick(&mut rng, 900);
                }
                if !delivered.is_empty() && rng.random_bool(spec.revisit_probability) {
                    let h = delivered[rng.random_range(0..delivered.len())].clone();
                    sim.emit(EventBody::HintRevisited {
                        student_id: s.clone(),
                        question_id: q.clone(),
                        hint_id: h,
                    })?;
                    sim.tick(&mut rng, 60);
                }
                if !delivered.is_empty() && rng.random_bool(spec.rating_probability) {
                    let h = delivered[rng.random_range(0..delivered.len())].clone();
                    let rating = if rng.random_bool(0.7) { ThumbRating::Up } else { ThumbRating::Down };
                    sim.emit(EventBody::HintRated {
                        student_id: s.clone(),
                        question_id: q.clone(),
                        hint_id: h,
                        rating,
                    })?;
                    sim.tick(&mut rng, 60);
                }
                let p = if used_hint { spec.solve_probability_with_hints } else { spec.solve_probability_without_hints };
                let solved = rng.random_bool(p);
                let total = 4;
                let passed = if solved { total } else { rng.random_range(0..total) };
                sim.emit(EventBody::SubmissionMade {
                    student_id: s.clone(),
                    question_id: q.clone(),
                    score: f64::from(passed) / f64::from(total),
                    tests_passed: passed,
                    tests_total: total,
                })?;
                sim.tick(&mut rng, 600);
                if solved {
                    break;
                }
            }
        }
    }
    Ok(sim.events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SimulationSpec {
        SimulationSpec {
            n_students: 10,
            n_questions: 2,
            seed: 7,
            request_propensity: Propensities {
                planning: 0.4,
                debugging: 0.6,
                optimization: 0.0,
            },
            solve_probability_without_hints: 0.3,
            solve_probability_with_hints: 0.5,
            consent_probability: 0.9,
            max_steps_per_question: 6,
            max_hints_per_question: 5,
            revisit_probability: 0.3,
            rating_probability: 0.3,
        }
    }

    #[test]
    fn same_seed_same_log() {
        let a = serde_json::to_string(&simulate(&spec()).unwrap()).unwrap();
        let b = serde_json::to_string(&simulate(&spec()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_propensity_means_no_events_of_that_type() {
        let events = simulate(&spec()).unwrap();
        assert!(events.iter().any(|e| matches!(e.body, EventBody::HintDelivered(_))));
        assert!(!events.iter().any(|e| matches!(&e.body, EventBody::HintRequested(r) if r.hint_type == HintType::Optimization)));
    }

    #[test]
    fn replays_within_quota() {
        let events = simulate(&spec()).unwrap();
        let state = LogState::replay(&events, QuotaPolicy::default()).unwrap();
        assert!(state.sessions().all(|s| s.hints.len() <= 5));
    }

    #[test]
    fn rejects_bad_probability() {
        let mut s = spec();
        s.solve_probability_with_hints = 1.5;
        assert!(simulate(&s).is_err());
    }
}
