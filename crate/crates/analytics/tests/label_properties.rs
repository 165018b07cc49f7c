mod common;

use std::collections::BTreeSet;

use common::LogBuilder;
use metahint_analytics::{
    contemplation_times, estimate_competency, estimate_difficulty, performance_reports, AnalyticsConfig,
    CompetencyLabel, DifficultyLabel, QuestionScore,
};
use metahint_core::{AssignmentId, HintType, QuestionId};
use proptest::prelude::*;

fn distinct_scores() -> impl Strategy<Value = Vec<Vec<f64>>> {
    // Per assignment 2..6 distinct scores.
    prop::collection::vec(prop::collection::btree_set(0u16..1000, 2..6), 1..5)
        .prop_map(|a| a.into_iter().map(|s| s.into_iter().map(|v| f64::from(v) / 1000.0).collect()).collect())
}

proptest! {
    #[test]
    fn difficulty_labels_one_easier_one_harder_per_assignment(assignments in distinct_scores()) {
        let mut rows = Vec::new();
        for (a, scores) in assignments.iter().enumerate() {
            for (i, s) in scores.iter().enumerate() {
                rows.push(QuestionScore {
                    question_id: QuestionId::new(format!("a{a}q{i}")).unwrap(),
                    assignment_id: AssignmentId::new(format!("A{a}")).unwrap(),
                    mean_score: *s,
                });
            }
        }
        let labels = estimate_difficulty(&rows, &AnalyticsConfig::default()).unwrap();
        let count = |l| labels.labels.values().filter(|&&x| x == l).count();
        prop_assert_eq!(count(DifficultyLabel::Easier), assignments.len());
        prop_assert_eq!(count(DifficultyLabel::Harder), assignments.len());
        prop_assert_eq!(labels.labels.len(), rows.len());
        prop_assert!(labels.tie_broken.is_empty());
        for (a, scores) in assignments.iter().enumerate() {
            let max = scores.iter().cloned().fold(f64::MIN, f64::max);
            let min = scores.iter().cloned().fold(f64::MAX, f64::min);
            for (i, s) in scores.iter().enumerate() {
                let l = labels.label(&QuestionId::new(format!("a{a}q{i}")).unwrap());
                prop_assert_eq!(l == DifficultyLabel::Easier, *s == max);
                prop_assert_eq!(l == DifficultyLabel::Harder, *s == min);
            }
        }
    }

    #[test]
    fn competency_groups_have_floor_fraction_without_ties(
        attempts in prop::collection::btree_set(1u32..60, 1..40),
        fraction in 0.05f64..=0.5,
    ) {
        // Distinct attempt counts: no boundary ties.
        let mut log = LogBuilder::default();
        for (i, &a) in attempts.iter().enumerate() {
            let s = format!("s{i:02}");
            for k in 0..a {
                log.submit(&s, "a1q", if k + 1 == a { 1.0 } else { 0.0 });
            }
        }
        let refs: BTreeSet<QuestionId> = [QuestionId::new("a1q").unwrap()].into_iter().collect();
        let cfg = AnalyticsConfig {
            competency_fraction: fraction,
            ..Default::default()
        };
        let c = estimate_competency(&log.events, &refs, &cfg).unwrap();
        let k = (fraction * attempts.len() as f64 + 1e-9).floor() as usize;
        prop_assert!(!c.higher_boundary_tie && !c.lower_boundary_tie);
        prop_assert_eq!(c.count(CompetencyLabel::Higher), k);
        prop_assert_eq!(c.count(CompetencyLabel::Lower), k);
        prop_assert_eq!(c.labels.len(), attempts.len());
    }

    #[test]
    fn filtered_group_sizes_sum_to_population(
        plan in prop::collection::vec((0usize..8, 0usize..6, 0usize..3, 0u8..3, any::<bool>()), 1..80),
    ) {
        let mut log = LogBuilder::default();
        for &(s, q, kind, t, solved) in &plan {
            let (s, q) = (format!("s{s}"), format!("q{q}"));
            match kind {
                0 => { log.hint(&s, &q, HintType::ALL[t as usize]); }
                1 => { log.submit(&s, &q, if solved { 1.0 } else { 0.5 }); }
                _ => { log.consent(&s); }
            }
        }
        let rows: Vec<QuestionScore> = (0..6)
            .map(|q| QuestionScore {
                question_id: QuestionId::new(format!("q{q}")).unwrap(),
                assignment_id: AssignmentId::new(format!("A{}", q / 3 + 1)).unwrap(),
                mean_score: 0.1 * q as f64 + 0.05,
            })
            .collect();
        let cfg = AnalyticsConfig::default();
        let difficulty = estimate_difficulty(&rows, &cfg).unwrap();
        let refs: BTreeSet<QuestionId> =
            (0..3).map(|q| QuestionId::new(format!("q{q}")).unwrap()).collect();
        let competency = estimate_competency(&log.events, &refs, &cfg).unwrap();
        let reports = performance_reports(&log.events, Some(&difficulty), Some(&competency));

        let by_difficulty: u64 = reports.by_difficulty.values().map(|r| r.population).sum();
        prop_assert_eq!(by_difficulty, reports.all.population);

        // Competency breakdowns leave out the reference assignment's questions.
        let outside_reference = metahint_analytics::pair_outcomes(&log.events)
            .iter()
            .filter(|p| !refs.contains(&p.key.question_id))
            .count() as u64;
        let by_competency: u64 = reports.by_competency.values().map(|r| r.population).sum();
        prop_assert_eq!(by_competency, outside_reference);

        for r in std::iter::once(&reports.all).chain(reports.by_difficulty.values()).chain(reports.by_competency.values()) {
            let no = r.bars[0].n;
            let any = r.bars[1].n;
            prop_assert_eq!(no + any, r.population);
            for bar in &r.bars[2..] {
                prop_assert!(bar.n <= any);
            }
        }
    }
}

#[test]
fn contemplation_cutoff_knob() {
    let mut log = LogBuilder::default();
    log.hint("s", "q1", HintType::Planning);
    log.advance(14 * 60 - 1);
    log.hint("s", "q1", HintType::Debugging);
    log.advance(90 * 60 - 1);
    log.submit("s", "q1", 1.0);
    log.hint("s", "q2", HintType::Optimization);

    let kept = contemplation_times(&log.events, &AnalyticsConfig::default());
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].hint_type, HintType::Planning);
    assert_eq!(kept[0].duration_secs, 14.0 * 60.0);

    let wide = AnalyticsConfig {
        contemplation_cutoff_secs: 2.0 * 3600.0,
        ..Default::default()
    };
    let kept = contemplation_times(&log.events, &wide);
    assert_eq!(kept.len(), 2);
    assert_eq!(kept[1].duration_secs, 90.0 * 60.0);
}
