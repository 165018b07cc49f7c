//! Report documents assembled from the individual metrics.

use std::collections::{BTreeMap, BTreeSet};

use metahint_core::{Event, HintType, QuestionId, StudentId};
use serde::{Deserialize, Serialize};

use crate::config::AnalyticsConfig;
use crate::engagement::{contemplation_times, hint_engagement, rating_counts, RatingCounts};
use crate::labels::{CompetencyLabel, CompetencyLabels, DifficultyLabel, DifficultyLabels};
use crate::performance::{pair_outcomes, breakdown_from_pairs, PairFilter, PerformanceReport};
use crate::sequences::{
    hint_sequences, isolated_from_sequences, stats_from_sequences, type_counts_per_question, IsolatedFraction,
    SequenceStats, TypeCounts,
};
use crate::stats::{
    chi_square_independence, chi_square_pairwise_rows, dunn_posthoc, kruskal_wallis, moods_median_test,
    moods_pairwise, PValueMethod, StatTestResult, StatsError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    #[serde(flatten)]
    pub stats: SequenceStats,
    pub isolated: Vec<IsolatedFraction>,
    pub hint_seeking_students: u64,
    pub type_counts_per_question: BTreeMap<QuestionId, TypeCounts>,
}

pub fn sequence_report(events: &[Event]) -> SequenceReport {
    let sequences = hint_sequences(events);
    let students: BTreeSet<&StudentId> = sequences.keys().map(|k| &k.student_id).collect();
    SequenceReport {
        stats: stats_from_sequences(sequences.values()),
        isolated: HintType::ALL.iter().map(|&t| isolated_from_sequences(sequences.values(), t)).collect(),
        hint_seeking_students: students.len() as u64,
        type_counts_per_question: type_counts_per_question(events),
    }
}

/// A test over the hint types that have data. Post hoc indices refer to `groups`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeComparison {
    pub groups: Vec<HintType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<StatTestResult>,
    /// Why the test could not run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl TypeComparison {
    fn skipped(groups: Vec<HintType>, why: impl Into<String>) -> Self {
        Self {
            groups,
            result: None,
            skipped: Some(why.into()),
        }
    }

    fn from_result(groups: Vec<HintType>, r: Result<StatTestResult, StatsError>) -> Self {
        match r {
            Ok(result) => Self {
                groups,
                result: Some(result),
                skipped: None,
            },
            Err(e) => Self::skipped(groups, e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSummary {
    pub hint_type: HintType,
    pub n: u64,
    pub median: Option<f64>,
    pub mean: Option<f64>,
}

fn summarize(t: HintType, values: &[f64]) -> TypeSummary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = (n > 0).then(|| if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 });
    TypeSummary {
        hint_type: t,
        n: n as u64,
        median,
        mean: (n > 0).then(|| v.iter().sum::<f64>() / n as f64),
    }
}

fn non_empty_groups(by_type: &BTreeMap<HintType, Vec<f64>>) -> (Vec<HintType>, Vec<Vec<f64>>) {
    by_type.iter().filter(|(_, v)| !v.is_empty()).map(|(t, v)| (*t, v.clone())).unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementReport {
    pub contemplation_cutoff_secs: f64,
    pub contemplation_secs: Vec<TypeSummary>,
    /// Mood's median test with pairwise Mood's tests (Bonferroni).
    pub contemplation_test: TypeComparison,
    /// Revisits per delivered hint.
    pub revisits_per_hint: Vec<TypeSummary>,
    pub revisit_totals: TypeCounts,
    /// Kruskal–Wallis with Dunn's pairwise tests (Bonferroni).
    pub revisit_test: TypeComparison,
    pub ratings: BTreeMap<HintType, RatingCounts>,
    /// χ² on up/down counts with pairwise χ² tests (Bonferroni).
    pub rating_test: TypeComparison,
}

pub fn engagement_report(events: &[Event], cfg: &AnalyticsConfig, method: PValueMethod) -> EngagementReport {
    let empty = || HintType::ALL.iter().map(|&t| (t, Vec::new())).collect::<BTreeMap<HintType, Vec<f64>>>();

    let mut contemplation = empty();
    for c in contemplation_times(events, cfg) {
        contemplation.get_mut(&c.hint_type).expect("all types").push(c.duration_secs);
    }
    let (groups, data) = non_empty_groups(&contemplation);
    let contemplation_test = if groups.len() < 2 {
        TypeComparison::skipped(groups, "fewer than two hint types with contemplation data")
    } else {
        TypeComparison::from_result(
            groups,
            moods_median_test(&data).and_then(|mut r| {
                r.posthoc = Some(moods_pairwise(&data)?);
                Ok(r)
            }),
        )
    };

    let mut revisits = empty();
    let mut revisit_totals = TypeCounts::default();
    for h in hint_engagement(events) {
        revisits.get_mut(&h.hint_type).expect("all types").push(h.revisits as f64);
        revisit_totals.add(h.hint_type, h.revisits);
    }
    let (groups, data) = non_empty_groups(&revisits);
    let revisit_test = if groups.len() < 2 {
        TypeComparison::skipped(groups, "fewer than two hint types delivered")
    } else {
        TypeComparison::from_result(
            groups,
            kruskal_wallis(&data, method).and_then(|mut r| {
                r.posthoc = Some(dunn_posthoc(&data, method)?);
                Ok(r)
            }),
        )
    };

    let ratings = rating_counts(events);
    let (groups, table): (Vec<HintType>, Vec<Vec<u64>>) = ratings
        .iter()
        .filter(|(_, c)| c.up + c.down > 0)
        .map(|(t, c)| (*t, vec![c.up, c.down]))
        .unzip();
    let rating_test = if groups.len() < 2 {
        TypeComparison::skipped(groups, "fewer than two hint types with ratings")
    } else {
        TypeComparison::from_result(
            groups,
            chi_square_independence(&table, false).and_then(|mut r| {
                r.posthoc = Some(chi_square_pairwise_rows(&table)?);
                Ok(r)
            }),
        )
    };

    EngagementReport {
        contemplation_cutoff_secs: cfg.contemplation_cutoff_secs,
        contemplation_secs: contemplation.iter().map(|(t, v)| summarize(*t, v)).collect(),
        contemplation_test,
        revisits_per_hint: revisits.iter().map(|(t, v)| summarize(*t, v)).collect(),
        revisit_totals,
        revisit_test,
        ratings,
        rating_test,
    }
}

/// One five-bar breakdown per filter value, plus the unfiltered one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReports {
    pub all: PerformanceReport,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub by_difficulty: BTreeMap<DifficultyLabel, PerformanceReport>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub by_competency: BTreeMap<CompetencyLabel, PerformanceReport>,
}

pub fn performance_reports(
    events: &[Event],
    difficulty: Option<&DifficultyLabels>,
    competency: Option<&CompetencyLabels>,
) -> PerformanceReports {
    let pairs = pair_outcomes(events);
    let all = breakdown_from_pairs(&pairs, &PairFilter::default());
    let by_difficulty = difficulty
        .map(|labels| {
            [DifficultyLabel::Easier, DifficultyLabel::Harder, DifficultyLabel::Unlabeled]
                .into_iter()
                .map(|l| {
                    let filter = PairFilter {
                        difficulty: Some((labels, l)),
                        ..Default::default()
                    };
                    (l, breakdown_from_pairs(&pairs, &filter))
                })
                .collect()
        })
        .unwrap_or_default();
    let by_competency = competency
        .map(|labels| {
            [CompetencyLabel::Higher, CompetencyLabel::Middle, CompetencyLabel::Lower]
                .into_iter()
                .map(|l| {
                    let filter = PairFilter {
                        competency: Some((labels, l)),
                        ..Default::default()
                    };
                    (l, breakdown_from_pairs(&pairs, &filter))
                })
                .collect()
        })
        .unwrap_or_default();
    PerformanceReports {
        all,
        by_difficulty,
        by_competency,
    }
}
