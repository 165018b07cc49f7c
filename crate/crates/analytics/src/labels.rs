//! Question-difficulty and student-competency labels.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use metahint_core::{AssignmentId, Event, EventBody, QuestionId, StudentId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::AnalyticsConfig;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("question scores: {0}")]
    Csv(#[from] csv::Error),
    #[error("question scores line {line}: {message}")]
    BadRow { line: u64, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: QuestionId,
    pub assignment_id: AssignmentId,
    /// Mean score of a previous cohort.
    pub mean_score: f64,
}

/// Reads `question_id,assignment_id,mean_score` rows with a header line.
pub fn read_question_scores(reader: impl Read) -> Result<Vec<QuestionScore>, LabelError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<QuestionScore>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            LabelError::BadRow { line, message: e.to_string() }
        })?;
        if !row.mean_score.is_finite() {
            return Err(LabelError::BadRow {
                line: out.len() as u64 + 2,
                message: "mean_score must be finite".into(),
            });
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifficultyLabel {
    Easier,
    Harder,
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyLabels {
    pub labels: BTreeMap<QuestionId, DifficultyLabel>,
    pub assignment_of: BTreeMap<QuestionId, AssignmentId>,
    /// Assignments where a score tie at a group boundary was broken by question id.
    pub tie_broken: BTreeSet<AssignmentId>,
}

impl DifficultyLabels {
    pub fn label(&self, q: &QuestionId) -> DifficultyLabel {
        self.labels.get(q).copied().unwrap_or(DifficultyLabel::Unlabeled)
    }
}

/// Per assignment, the highest-scored questions are Easier and the
/// lowest-scored of the rest are Harder.
pub fn estimate_difficulty(scores: &[QuestionScore], cfg: &AnalyticsConfig) -> Result<DifficultyLabels, LabelError> {
    let n = cfg.difficulty_group_size_per_assignment;
    let mut by_assignment: BTreeMap<&AssignmentId, Vec<&QuestionScore>> = BTreeMap::new();
    let mut assignment_of = BTreeMap::new();
    for s in scores {
        if let Some(prev) = assignment_of.insert(s.question_id.clone(), s.assignment_id.clone()) {
            if prev != s.assignment_id {
                return Err(LabelError::InsufficientData(format!(
                    "question {} listed under two assignments",
                    s.question_id
                )));
            }
            return Err(LabelError::InsufficientData(format!("question {} listed twice", s.question_id)));
        }
        by_assignment.entry(&s.assignment_id).or_default().push(s);
    }
    if by_assignment.is_empty() {
        return Err(LabelError::InsufficientData("no question scores".into()));
    }

    let mut labels = BTreeMap::new();
    let mut tie_broken = BTreeSet::new();
    for (assignment, mut qs) in by_assignment {
        if qs.len() < 2 * n {
            return Err(LabelError::InsufficientData(format!(
                "assignment {assignment} has {} scored questions, need {}",
                qs.len(),
                2 * n
            )));
        }
        qs.sort_by(|a, b| b.mean_score.total_cmp(&a.mean_score).then_with(|| a.question_id.cmp(&b.question_id)));
        if qs[n - 1].mean_score == qs[n].mean_score {
            tie_broken.insert(assignment.clone());
        }
        let (easier, rest) = qs.split_at_mut(n);
        rest.sort_by(|a, b| a.mean_score.total_cmp(&b.mean_score).then_with(|| a.question_id.cmp(&b.question_id)));
        if rest.len() > n && rest[n - 1].mean_score == rest[n].mean_score {
            tie_broken.insert(assignment.clone());
        }
        for (i, q) in easier.iter().chain(rest.iter()).enumerate() {
            let label = if i < n {
                DifficultyLabel::Easier
            } else if i < 2 * n {
                DifficultyLabel::Harder
            } else {
                DifficultyLabel::Unlabeled
            };
            labels.insert(q.question_id.clone(), label);
        }
    }
    Ok(DifficultyLabels {
        labels,
        assignment_of,
        tie_broken,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompetencyLabel {
    Higher,
    Middle,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentAttempts {
    pub student_id: StudentId,
    /// Questions of the reference assignment solved at least once.
    pub solved: usize,
    pub solved_all: bool,
    /// Submissions up to and including the first solve; all submissions for
    /// unsolved questions.
    pub attempts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetencyLabels {
    pub labels: BTreeMap<StudentId, CompetencyLabel>,
    /// Questions the ranking was based on.
    pub reference_questions: BTreeSet<QuestionId>,
    /// Best first.
    pub ranking: Vec<StudentAttempts>,
    /// Students tied across the Higher boundary were moved to Middle.
    pub higher_boundary_tie: bool,
    pub lower_boundary_tie: bool,
}

impl CompetencyLabels {
    pub fn label(&self, s: &StudentId) -> CompetencyLabel {
        self.labels.get(s).copied().unwrap_or(CompetencyLabel::Middle)
    }

    pub fn count(&self, label: CompetencyLabel) -> usize {
        self.labels.values().filter(|&&l| l == label).count()
    }
}

fn rank_key(a: &StudentAttempts) -> (bool, std::cmp::Reverse<usize>, u64) {
    (!a.solved_all, std::cmp::Reverse(a.solved), a.attempts)
}

/// Ranks every student in the log by attempts on `reference_questions`.
/// Solvers of all of them come first (fewest attempts best), then the rest by
/// solved count and attempts. A tie straddling a group boundary sends the
/// tied students to Middle.
pub fn estimate_competency(
    events: &[Event],
    reference_questions: &BTreeSet<QuestionId>,
    cfg: &AnalyticsConfig,
) -> Result<CompetencyLabels, LabelError> {
    if reference_questions.is_empty() {
        return Err(LabelError::InsufficientData(format!(
            "no questions known for assignment {}",
            cfg.excluded_assignment_for_competency
        )));
    }
    let mut sorted: Vec<&Event> = events.iter().collect();
    sorted.sort_by_key(|e| e.seq);

    // student → question → (attempts, solved)
    let mut per: BTreeMap<StudentId, BTreeMap<QuestionId, (u64, bool)>> = BTreeMap::new();
    for e in sorted {
        let entry = per.entry(e.body.student_id().clone()).or_default();
        if let EventBody::SubmissionMade { question_id, score, .. } = &e.body {
            if !reference_questions.contains(question_id) {
                continue;
            }
            let slot = entry.entry(question_id.clone()).or_insert((0, false));
            if !slot.1 {
                slot.0 += 1;
                slot.1 = *score == 1.0;
            }
        }
    }

    let mut ranking: Vec<StudentAttempts> = per
        .into_iter()
        .map(|(student_id, qs)| {
            let solved = qs.values().filter(|(_, s)| *s).count();
            StudentAttempts {
                student_id,
                solved,
                solved_all: solved == reference_questions.len(),
                attempts: qs.values().map(|(a, _)| a).sum(),
            }
        })
        .collect();
    ranking.sort_by(|a, b| rank_key(a).cmp(&rank_key(b)).then_with(|| a.student_id.cmp(&b.student_id)));

    let n = ranking.len();
    let k = (cfg.competency_fraction * n as f64 + 1e-9).floor() as usize;
    let mut labels: BTreeMap<StudentId, CompetencyLabel> =
        ranking.iter().map(|a| (a.student_id.clone(), CompetencyLabel::Middle)).collect();
    let mut higher_boundary_tie = false;
    let mut lower_boundary_tie = false;
    if k > 0 {
        let top_key = rank_key(&ranking[k - 1]);
        higher_boundary_tie = k < n && rank_key(&ranking[k]) == top_key;
        for a in &ranking[..k] {
            if !(higher_boundary_tie && rank_key(a) == top_key) {
                labels.insert(a.student_id.clone(), CompetencyLabel::Higher);
            }
        }
        let bottom_key = rank_key(&ranking[n - k]);
        lower_boundary_tie = n > k && rank_key(&ranking[n - k - 1]) == bottom_key;
        for a in &ranking[n - k..] {
            if !(lower_boundary_tie && rank_key(a) == bottom_key) {
                labels.insert(a.student_id.clone(), CompetencyLabel::Lower);
            }
        }
    }
    Ok(CompetencyLabels {
        labels,
        reference_questions: reference_questions.clone(),
        ranking,
        higher_boundary_tie,
        lower_boundary_tie,
    })
}
