//! Solving rates by hint usage.

use std::collections::{BTreeMap, BTreeSet};

use metahint_core::{Event, EventBody, HintType, SessionKey};
use serde::{Deserialize, Serialize};

use crate::labels::{CompetencyLabel, CompetencyLabels, DifficultyLabel, DifficultyLabels};
use crate::stats::{binomial_se, chi_square_independence, StatsError};

/// What is known about one (student, question) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub key: SessionKey,
    pub types_present: BTreeSet<HintType>,
    /// Any submission with a perfect score. Pairs without submissions are unsolved.
    pub solved: bool,
}

/// Every pair with at least one session-scoped event.
pub fn pair_outcomes(events: &[Event]) -> Vec<PairOutcome> {
    let mut pairs: BTreeMap<SessionKey, PairOutcome> = BTreeMap::new();
    for e in events {
        let Some(key) = e.body.session_key() else { continue };
        let entry = pairs.entry(key.clone()).or_insert_with(|| PairOutcome {
            key,
            types_present: BTreeSet::new(),
            solved: false,
        });
        match &e.body {
            EventBody::HintDelivered(hint) => {
                entry.types_present.insert(hint.hint_type());
            }
            EventBody::SubmissionMade { score, .. } if *score == 1.0 => entry.solved = true,
            _ => {}
        }
    }
    pairs.into_values().collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PairFilter<'a> {
    pub difficulty: Option<(&'a DifficultyLabels, DifficultyLabel)>,
    /// Also drops pairs on the questions that defined competency.
    pub competency: Option<(&'a CompetencyLabels, CompetencyLabel)>,
}

impl PairFilter<'_> {
    pub fn keeps(&self, key: &SessionKey) -> bool {
        if let Some((labels, want)) = self.difficulty {
            if labels.label(&key.question_id) != want {
                return false;
            }
        }
        if let Some((labels, want)) = self.competency {
            if labels.reference_questions.contains(&key.question_id) || labels.label(&key.student_id) != want {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BarGroup {
    No,
    Any,
    Planning,
    Debugging,
    Optimization,
}

impl BarGroup {
    pub const ALL: [BarGroup; 5] = [Self::No, Self::Any, Self::Planning, Self::Debugging, Self::Optimization];

    fn contains(self, pair: &PairOutcome) -> bool {
        match self {
            BarGroup::No => pair.types_present.is_empty(),
            BarGroup::Any => !pair.types_present.is_empty(),
            BarGroup::Planning => pair.types_present.contains(&HintType::Planning),
            BarGroup::Debugging => pair.types_present.contains(&HintType::Debugging),
            BarGroup::Optimization => pair.types_present.contains(&HintType::Optimization),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub group: BarGroup,
    pub n: u64,
    pub solved: u64,
    /// `None` marks an absent bar (empty group).
    pub rate: Option<f64>,
    pub standard_error: Option<f64>,
    /// χ² against the No group; absent for No itself or when either group is empty.
    pub chi_square: Option<f64>,
    pub p_value: Option<f64>,
    /// `*` for p < 0.05, `**` for p < 0.01.
    pub marker: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub population: u64,
    pub solved: u64,
    pub overall_rate: Option<f64>,
    pub bars: Vec<Bar>,
}

impl PerformanceReport {
    pub fn bar(&self, group: BarGroup) -> &Bar {
        self.bars.iter().find(|b| b.group == group).expect("all five bars present")
    }
}

/// 2×2 χ² without continuity correction. Equal degenerate proportions
/// (a zero column) give statistic 0 and p = 1.
pub fn compare_proportions(solved_a: u64, n_a: u64, solved_b: u64, n_b: u64) -> Option<(f64, f64)> {
    if n_a == 0 || n_b == 0 {
        return None;
    }
    let table = vec![vec![solved_a, n_a - solved_a], vec![solved_b, n_b - solved_b]];
    match chi_square_independence(&table, false) {
        Ok(r) => Some((r.statistic, r.p_value)),
        Err(StatsError::ZeroExpectedCount) => Some((0.0, 1.0)),
        Err(_) => None,
    }
}

pub fn marker(p: Option<f64>) -> String {
    match p {
        Some(p) if p < 0.01 => "**".into(),
        Some(p) if p < 0.05 => "*".into(),
        _ => String::new(),
    }
}

pub fn breakdown_from_pairs<'a>(pairs: impl IntoIterator<Item = &'a PairOutcome>, filter: &PairFilter) -> PerformanceReport {
    let kept: Vec<&PairOutcome> = pairs.into_iter().filter(|p| filter.keeps(&p.key)).collect();
    let tally = |g: BarGroup| {
        let members = kept.iter().filter(|p| g.contains(p));
        let (mut n, mut solved) = (0u64, 0u64);
        for p in members {
            n += 1;
            solved += u64::from(p.solved);
        }
        (n, solved)
    };
    let (no_n, no_solved) = tally(BarGroup::No);
    let bars = BarGroup::ALL
        .iter()
        .map(|&group| {
            let (n, solved) = tally(group);
            let test = if group == BarGroup::No { None } else { compare_proportions(solved, n, no_solved, no_n) };
            Bar {
                group,
                n,
                solved,
                rate: (n > 0).then(|| solved as f64 / n as f64),
                standard_error: binomial_se(solved, n),
                chi_square: test.map(|t| t.0),
                p_value: test.map(|t| t.1),
                marker: marker(test.map(|t| t.1)),
            }
        })
        .collect();
    let population = kept.len() as u64;
    let solved = kept.iter().filter(|p| p.solved).count() as u64;
    PerformanceReport {
        population,
        solved,
        overall_rate: (population > 0).then(|| solved as f64 / population as f64),
        bars,
    }
}

pub fn performance_breakdown(events: &[Event], filter: &PairFilter) -> PerformanceReport {
    breakdown_from_pairs(&pair_outcomes(events), filter)
}
