//! Batch analytics over hint-service event logs: help-seeking sequences,
//! engagement, difficulty and competency labels, solving-rate breakdowns and
//! the hypothesis tests behind them.
//!
//! Everything here is a pure function of an event slice.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engagement;
pub mod export;
pub mod labels;
pub mod performance;
pub mod reports;
pub mod sequences;
pub mod stats;

pub use config::{AnalyticsConfig, InvalidConfig};
pub use engagement::{contemplation_times, hint_engagement, rating_counts, revisit_totals, Contemplation, HintEngagement, RatingCounts};
pub use labels::{
    estimate_competency, estimate_difficulty, read_question_scores, CompetencyLabel, CompetencyLabels, DifficultyLabel,
    DifficultyLabels, LabelError, QuestionScore, StudentAttempts,
};
pub use performance::{
    breakdown_from_pairs, pair_outcomes, performance_breakdown, Bar, BarGroup, PairFilter, PairOutcome, PerformanceReport,
};
pub use reports::{
    engagement_report, performance_reports, sequence_report, EngagementReport, PerformanceReports, SequenceReport,
    TypeComparison, TypeSummary,
};
pub use sequences::{
    hint_sequences, isolated_type_fraction, sequence_label, sequence_stats, type_counts_per_question, FlowLink,
    IsolatedFraction, SequenceCount, SequenceStats, SequenceSummary, TypeCounts,
};
pub use stats::{PValueMethod, PairwiseResult, StatTestResult, StatsError};
