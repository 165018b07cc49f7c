//! The bundled cohort fixture.
//!
//! Only the aggregate hint counts are fixed: 366 student-question pairs with
//! hints, 725 hints (258 planning, 411 debugging, 56 optimization) of which 24
//! optimization hints sit in optimization-only sequences. Everything else
//! (timestamps, revisits, ratings, submissions, past-cohort scores) is
//! synthetic, drawn from a fixed seed.

use chrono::{TimeDelta, TimeZone, Utc};
use metahint_analytics::QuestionScore;
use metahint_core::{
    AssignmentId, Event, EventBody, GenerationMetadata, Hint, HintId, HintRequest, HintType, QuestionId, StudentId,
    ThumbRating, Timestamp, ValidationOutcome,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE_SEED: u64 = 0x00A1_5F1C;
pub const STUDENTS: usize = 102;
pub const HINT_SEEKERS: usize = 76;
pub const QUESTIONS: usize = 14;
/// First question index of each assignment.
const ASSIGNMENT_STARTS: [usize; 4] = [0, 3, 7, 11];

use HintType::{Debugging as D, Optimization as O, Planning as P};

/// (sequence, how many pairs have it)
const SEQUENCES: &[(&[HintType], usize)] = &[
    // optimization mixed with other types
    (&[P, O], 8),
    (&[D, O], 10),
    (&[D, D, O], 6),
    (&[P, D, O], 8),
    // optimization only
    (&[O], 18),
    (&[O, O], 3),
    // planning and debugging
    (&[P, D], 30),
    (&[P, D, D], 20),
    (&[P, P, D], 10),
    (&[D, P], 10),
    // planning only
    (&[P], 80),
    (&[P, P], 29),
    (&[P, P, P], 8),
    // debugging only
    (&[D], 39),
    (&[D, D], 40),
    (&[D, D, D], 25),
    (&[D, D, D, D], 13),
    (&[D, D, D, D, D], 9),
];

/// The 366 hint sequences in declaration order.
pub fn fixture_sequences() -> Vec<Vec<HintType>> {
    SEQUENCES
        .iter()
        .flat_map(|(seq, n)| std::iter::repeat_n(seq.to_vec(), *n))
        .collect()
}

pub fn student_id(i: usize) -> StudentId {
    StudentId::new(format!("s{:03}", i + 1)).expect("non-empty")
}

pub fn question_id(q: usize) -> QuestionId {
    QuestionId::new(format!("q{:02}", q + 1)).expect("non-empty")
}

pub fn assignment_index(q: usize) -> usize {
    ASSIGNMENT_STARTS.iter().rposition(|&start| q >= start).expect("first start is 0")
}

pub fn assignment_id(q: usize) -> AssignmentId {
    AssignmentId::new(format!("A{}", assignment_index(q) + 1)).expect("non-empty")
}

/// Pair i goes to hint seeker i mod 76; each seeker's pairs land on distinct questions.
fn pair_slot(i: usize) -> (usize, usize) {
    let student = i % HINT_SEEKERS;
    (student, (3 * (i / HINT_SEEKERS) + student) % QUESTIONS)
}

pub struct Fixture {
    pub events: Vec<Event>,
    /// Synthetic previous-cohort mean scores, for difficulty labels.
    pub question_scores: Vec<QuestionScore>,
}

struct Timeline {
    items: Vec<(Timestamp, usize, usize, EventBody)>,
    pair: usize,
    step: usize,
}

impl Timeline {
    fn push(&mut self, at: Timestamp, body: EventBody) {
        self.items.push((at, self.pair, self.step, body));
        self.step += 1;
    }
}

fn secs(s: f64) -> TimeDelta {
    TimeDelta::seconds(s.round() as i64)
}

/// Exponential draw with the given median, in seconds.
fn gap(rng: &mut ChaCha8Rng, median_secs: f64) -> f64 {
    let u: f64 = rng.random_range(1e-9..1.0);
    (median_secs * -u.ln() / std::f64::consts::LN_2).max(5.0)
}

fn submission(student: &StudentId, question: &QuestionId, passed: u32, total: u32) -> EventBody {
    EventBody::SubmissionMade {
        student_id: student.clone(),
        question_id: question.clone(),
        score: f64::from(passed) / f64::from(total),
        tests_passed: passed,
        tests_total: total,
    }
}

fn contemplation_median(t: HintType) -> f64 {
    match t {
        HintType::Planning => 9.0 * 60.0,
        HintType::Debugging => 4.0 * 60.0,
        HintType::Optimization => 6.0 * 60.0,
    }
}

pub fn paper_fixture() -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let base = Utc.with_ymd_and_hms(2024, 9, 2, 8, 0, 0).single().expect("valid date");
    const TESTS: u32 = 5;

    let mut sequences = fixture_sequences();
    sequences.shuffle(&mut rng);
    let mut hint_pairs: std::collections::BTreeMap<(usize, usize), Vec<HintType>> = Default::default();
    for (i, seq) in sequences.into_iter().enumerate() {
        hint_pairs.insert(pair_slot(i), seq);
    }

    let mut tl = Timeline {
        items: Vec::new(),
        pair: 0,
        step: 0,
    };
    // Every hint seeker consents before the term; a few others do too.
    for s in 0..STUDENTS {
        if s < HINT_SEEKERS || s % 5 == 0 {
            tl.push(base - TimeDelta::days(1) + TimeDelta::minutes(s as i64), EventBody::ConsentGiven { student_id: student_id(s) });
        }
    }

    let mut hint_counter = 0usize;
    for s in 0..STUDENTS {
        for q in 0..QUESTIONS {
            tl.pair += 1;
            tl.step = 0;
            let student = student_id(s);
            let question = question_id(q);
            let hints = hint_pairs.get(&(s, q));
            let first_assignment = assignment_index(q) == 0;
            if hints.is_none() && !first_assignment && !rng.random_bool(0.8) {
                continue;
            }
            let week = TimeDelta::days(7 * assignment_index(q) as i64);
            let mut t = base + week + secs(rng.random_range(0.0..4.0 * 86_400.0));

            // A few attempts before any help.
            for _ in 0..rng.random_range(0..3) {
                tl.push(t, submission(&student, &question, rng.random_range(0..TESTS), TESTS));
                t += secs(gap(&mut rng, 240.0));
            }

            if let Some(seq) = hints {
                for (k, &hint_type) in seq.iter().enumerate() {
                    let request = HintRequest {
                        student_id: student.clone(),
                        question_id: question.clone(),
                        hint_type,
                        reflection: String::new(),
                        code_snapshot: String::new(),
                        requested_at: t,
                    };
                    tl.push(t, EventBody::HintRequested(request.clone()));
                    let delivered_at = t + secs(rng.random_range(4.0..25.0));
                    hint_counter += 1;
                    let hint_id = HintId::new(format!("fx-{hint_counter:04}")).expect("non-empty");
                    tl.push(
                        delivered_at,
                        EventBody::HintDelivered(Hint {
                            hint_id: hint_id.clone(),
                            request,
                            explanation: "synthetic".into(),
                            hint_text: format!("synthetic {} hint", hint_type.as_str()),
                            delivered_at,
                            generation_metadata: GenerationMetadata {
                                provider: "fixture".into(),
                                model: "none".into(),
                                candidate_attempts: 0,
                                hint_attempts: 1,
                                validation: ValidationOutcome::NotApplicable,
                                optimized_runtime_secs: None,
                            },
                        }),
                    );
                    // One in twenty students wanders off for a long while.
                    let pause = if rng.random_bool(0.05) {
                        rng.random_range(3_700.0..20_000.0)
                    } else {
                        gap(&mut rng, contemplation_median(hint_type))
                    };
                    let next = delivered_at + secs(pause);

                    // Revisits and ratings happen during the pause.
                    let mut inner = delivered_at;
                    let revisits = if rng.random_bool(0.35) { rng.random_range(1..4) } else { 0 };
                    for _ in 0..revisits {
                        inner += secs(rng.random_range(1.0..(pause / 4.0).max(2.0)));
                        if inner >= next {
                            break;
                        }
                        tl.push(
                            inner,
                            EventBody::HintRevisited {
                                student_id: student.clone(),
                                question_id: question.clone(),
                                hint_id: hint_id.clone(),
                            },
                        );
                    }
                    if rng.random_bool(0.45) && inner + secs(1.0) < next {
                        let up = rng.random_bool(if hint_type == HintType::Planning { 0.8 } else { 0.65 });
                        tl.push(
                            inner + secs(1.0),
                            EventBody::HintRated {
                                student_id: student.clone(),
                                question_id: question.clone(),
                                hint_id,
                                rating: if up { ThumbRating::Up } else { ThumbRating::Down },
                            },
                        );
                    }
                    t = next;
                    if k + 1 < seq.len() && rng.random_bool(0.4) {
                        tl.push(t, submission(&student, &question, rng.random_range(0..TESTS), TESTS));
                        t += secs(gap(&mut rng, 180.0));
                    }
                }
                // Most hint pairs end solved; a few are abandoned without a submission.
                if rng.random_bool(0.95) {
                    let passed = if rng.random_bool(0.93) { TESTS } else { rng.random_range(1..TESTS) };
                    tl.push(t, submission(&student, &question, passed, TESTS));
                }
            } else {
                let solved = rng.random_bool(0.88);
                let passed = if solved { TESTS } else { rng.random_range(0..TESTS) };
                tl.push(t, submission(&student, &question, passed, TESTS));
            }
        }
    }

    tl.items.sort_by_key(|a| (a.0, a.1, a.2));
    let events = tl
        .items
        .into_iter()
        .enumerate()
        .map(|(seq, (at, _, _, body))| Event::new(seq as u64, at, body))
        .collect();

    let question_scores = (0..QUESTIONS)
        .map(|q| QuestionScore {
            question_id: question_id(q),
            assignment_id: assignment_id(q),
            mean_score: ((0.55 + 0.4 * rng.random::<f64>()) * 1000.0).round() / 1000.0,
        })
        .collect();

    Fixture {
        events,
        question_scores,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_sequences_add_up() {
        let seqs = fixture_sequences();
        assert_eq!(seqs.len(), 366);
        assert_eq!(seqs.iter().map(Vec::len).sum::<usize>(), 725);
        assert!(seqs.iter().all(|s| s.len() <= 5));
    }

    #[test]
    fn slots_are_unique() {
        let slots: std::collections::BTreeSet<_> = (0..366).map(pair_slot).collect();
        assert_eq!(slots.len(), 366);
    }

    #[test]
    fn assignments() {
        assert_eq!(assignment_id(0).as_str(), "A1");
        assert_eq!(assignment_id(2).as_str(), "A1");
        assert_eq!(assignment_id(3).as_str(), "A2");
        assert_eq!(assignment_id(13).as_str(), "A4");
    }
}
