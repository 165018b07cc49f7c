use std::path::Path;
use std::process::Command;
use std::time::Instant;

use metahint::analyze::{load_events, run_analyze, AnalyzeOptions, ReportName};
use metahint::fixture::paper_fixture;
use metahint::simulate::{simulate, Propensities, SimulationSpec};
use metahint::CliError;
use metahint_analytics::{sequence_report, AnalyticsConfig, PValueMethod};
use metahint_core::{write_log, HintType, LogState, QuotaPolicy};

fn options(log: &Path, out: &Path) -> AnalyzeOptions {
    AnalyzeOptions {
        log: log.to_path_buf(),
        reports: ReportName::ALL.to_vec(),
        out_dir: out.to_path_buf(),
        difficulty: None,
        competency: false,
        config: AnalyticsConfig::default(),
        p_method: PValueMethod::Auto,
        quota: QuotaPolicy::default(),
    }
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fixture_replays_and_matches_cohort_totals() {
    let fx = paper_fixture();
    LogState::replay(&fx.events, QuotaPolicy::default()).unwrap();
    let r = sequence_report(&fx.events);
    assert_eq!(r.stats.pair_count, 366);
    assert_eq!(r.stats.total_hints, 725);
    assert_eq!(r.stats.type_totals.planning, 258);
    assert_eq!(r.stats.type_totals.debugging, 411);
    assert_eq!(r.stats.type_totals.optimization, 56);
    let o = r.isolated.iter().find(|i| i.hint_type == HintType::Optimization).unwrap();
    assert_eq!((o.numerator, o.denominator), (24, 56));
    assert_eq!(r.hint_seeking_students, 76);
}

#[test]
fn fixture_is_deterministic() {
    let a = serde_json::to_string(&paper_fixture().events).unwrap();
    let b = serde_json::to_string(&paper_fixture().events).unwrap();
    assert_eq!(a, b);
}

#[test]
fn analyze_fixture_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("fixture.jsonl");
    let scores = dir.path().join("scores.csv");
    let fx = paper_fixture();
    write_log(&log, &fx.events).unwrap();
    let mut w = csv::Writer::from_path(&scores).unwrap();
    for s in &fx.question_scores {
        w.serialize(s).unwrap();
    }
    w.flush().unwrap();

    let out = dir.path().join("reports");
    let mut opts = options(&log, &out);
    opts.difficulty = Some(scores);
    opts.competency = true;
    let started = Instant::now();
    let result = run_analyze(&opts).unwrap();
    assert!(started.elapsed().as_secs_f64() < 5.0, "took {:?}", started.elapsed());
    assert_eq!(result.files.len(), 7);

    let seq = read_json(&out.join("sequence-stats.json"));
    assert_eq!(seq["total_hints"], 725);
    assert_eq!(seq["pair_count"], 366);

    let flows = std::fs::read_to_string(out.join("sequence-flows.csv")).unwrap();
    assert!(flows.lines().any(|l| l.starts_with("start,")));
    assert!(flows.lines().any(|l| l.contains(",end,")));

    let perf = read_json(&out.join("performance.json"));
    let by_difficulty = perf["by_difficulty"].as_object().unwrap();
    assert!(by_difficulty.contains_key("easier") && by_difficulty.contains_key("harder"));
    assert_eq!(perf["by_competency"].as_object().unwrap().len(), 3);
    let labels = read_json(&out.join("labels.json"));
    assert!(labels["difficulty"].is_object());
    assert!(labels["competency"].is_object());
}

#[test]
fn corrupted_line_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("bad.jsonl");
    let fx = paper_fixture();
    write_log(&log, &fx.events[..10]).unwrap();
    let mut text = std::fs::read_to_string(&log).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[6] = "{not json";
    text = lines.join("\n");
    std::fs::write(&log, text).unwrap();
    let err = load_events(&log, QuotaPolicy::default()).unwrap_err();
    assert!(matches!(err, CliError::Data(_)));
    assert!(err.to_string().contains("line 7"), "{err}");
}

#[test]
fn empty_log_gives_empty_reports_and_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("empty.jsonl");
    std::fs::write(&log, "").unwrap();
    let out = dir.path().join("r");
    let result = run_analyze(&options(&log, &out)).unwrap();
    assert!(result.warnings.iter().any(|w| w.contains("no events")));
    let seq = read_json(&out.join("sequence-stats.json"));
    assert_eq!(seq["total_hints"], 0);
    assert_eq!(seq["pair_count"], 0);
}

#[test]
fn competency_without_scores_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("empty.jsonl");
    std::fs::write(&log, "").unwrap();
    let mut opts = options(&log, dir.path());
    opts.competency = true;
    assert_eq!(run_analyze(&opts).unwrap_err().exit_code(), 2);
}

#[test]
fn simulate_is_seeded() {
    let spec = SimulationSpec {
        n_students: 20,
        n_questions: 3,
        seed: 99,
        request_propensity: Propensities {
            planning: 0.3,
            debugging: 0.4,
            optimization: 0.1,
        },
        solve_probability_without_hints: 0.4,
        solve_probability_with_hints: 0.6,
        consent_probability: 0.8,
        max_steps_per_question: 6,
        max_hints_per_question: 5,
        revisit_probability: 0.3,
        rating_probability: 0.3,
    };
    let a = simulate(&spec).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&simulate(&spec).unwrap()).unwrap());
    let mut other = spec.clone();
    other.seed = 100;
    assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&simulate(&other).unwrap()).unwrap());
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metahint"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("fx.jsonl");
    let st = bin().args(["fixture-paper", "--out"]).arg(&log).status().unwrap();
    assert!(st.success());

    let out = dir.path().join("reports");
    let st = bin()
        .args(["analyze", "--report", "sequence-stats", "--log"])
        .arg(&log)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(out.join("sequence-stats.json").exists());
    assert!(!out.join("engagement.json").exists());

    std::fs::write(dir.path().join("bad.jsonl"), "garbage\n").unwrap();
    let st = bin().args(["analyze", "--log"]).arg(dir.path().join("bad.jsonl")).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(3));

    let cfg = dir.path().join("a.toml");
    std::fs::write(&cfg, "contemplation_cutoff_secs = -1\n").unwrap();
    let st = bin()
        .args(["analyze", "--log"])
        .arg(&log)
        .arg("--analytics-config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}
