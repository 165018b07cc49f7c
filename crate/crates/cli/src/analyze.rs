//! The `analyze` command: replay-check a log and write report files.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use metahint_analytics::{
    engagement_report, estimate_competency, estimate_difficulty, export, performance_reports, read_question_scores,
    sequence_report, AnalyticsConfig, CompetencyLabels, DifficultyLabels, PValueMethod, QuestionScore,
};
use metahint_core::{read_log, Event, LogState, QuestionId, QuotaPolicy};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReportName {
    SequenceStats,
    Engagement,
    Performance,
    Labels,
}

impl ReportName {
    pub const ALL: [ReportName; 4] = [Self::SequenceStats, Self::Engagement, Self::Performance, Self::Labels];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SequenceStats => "sequence-stats",
            Self::Engagement => "engagement",
            Self::Performance => "performance",
            Self::Labels => "labels",
        }
    }
}

impl FromStr for ReportName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown report `{s}` (expected one of: sequence-stats, engagement, performance, labels)"))
    }
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub log: PathBuf,
    pub reports: Vec<ReportName>,
    pub out_dir: PathBuf,
    /// CSV of past-cohort mean scores; enables difficulty labels.
    pub difficulty: Option<PathBuf>,
    pub competency: bool,
    pub config: AnalyticsConfig,
    pub p_method: PValueMethod,
    pub quota: QuotaPolicy,
}

/// Files written, in order.
#[derive(Debug, Default)]
pub struct AnalyzeOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, f: impl FnOnce(File) -> csv::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    f(file).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Reads the log and checks that it replays cleanly.
pub fn load_events(path: &Path, quota: QuotaPolicy) -> Result<Vec<Event>, CliError> {
    let events = read_log(path).map_err(|e| CliError::Data(e.to_string()))?;
    LogState::replay(&events, quota).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(events)
}

#[derive(Serialize)]
struct LabelsReport<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    difficulty: Option<&'a DifficultyLabels>,
    #[serde(skip_serializing_if = "Option::is_none")]
    competency: Option<&'a CompetencyLabels>,
}

pub fn run_analyze(opts: &AnalyzeOptions) -> Result<AnalyzeOutput, CliError> {
    opts.config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let scores: Option<Vec<QuestionScore>> = match &opts.difficulty {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Some(read_question_scores(file).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    if opts.competency && scores.is_none() {
        return Err(CliError::Config(
            "--competency needs --difficulty: the scores file maps questions to assignments".into(),
        ));
    }
    let events = load_events(&opts.log, opts.quota)?;
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", opts.out_dir.display())))?;

    let mut out = AnalyzeOutput::default();
    if events.is_empty() {
        out.warnings.push(format!("{} holds no events; reports are empty", opts.log.display()));
    }

    let difficulty = scores
        .as_deref()
        .map(|s| estimate_difficulty(s, &opts.config))
        .transpose()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let competency = if opts.competency {
        let reference: BTreeSet<QuestionId> = scores
            .iter()
            .flatten()
            .filter(|s| s.assignment_id == opts.config.excluded_assignment_for_competency)
            .map(|s| s.question_id.clone())
            .collect();
        Some(estimate_competency(&events, &reference, &opts.config).map_err(|e| CliError::Data(e.to_string()))?)
    } else {
        None
    };

    let mut reports = opts.reports.clone();
    reports.sort();
    reports.dedup();
    for report in reports {
        let dir = &opts.out_dir;
        match report {
            ReportName::SequenceStats => {
                let r = sequence_report(&events);
                let json = dir.join("sequence-stats.json");
                write_json(&json, &r)?;
                let flows = dir.join("sequence-flows.csv");
                write_csv(&flows, |f| export::write_flows(f, &r.stats.transition_flows))?;
                let counts = dir.join("type-counts-per-question.csv");
                write_csv(&counts, |f| export::write_type_counts(f, &r.type_counts_per_question))?;
                out.files.extend([json, flows, counts]);
            }
            ReportName::Engagement => {
                let r = engagement_report(&events, &opts.config, opts.p_method);
                for (name, t) in [
                    ("contemplation", &r.contemplation_test),
                    ("revisit", &r.revisit_test),
                    ("rating", &r.rating_test),
                ] {
                    if let Some(why) = &t.skipped {
                        out.warnings.push(format!("{name} test skipped: {why}"));
                    }
                }
                let json = dir.join("engagement.json");
                write_json(&json, &r)?;
                out.files.push(json);
            }
            ReportName::Performance => {
                let r = performance_reports(&events, difficulty.as_ref(), competency.as_ref());
                let json = dir.join("performance.json");
                write_json(&json, &r)?;
                let csv_path = dir.join("performance.csv");
                let mut rows = vec![("all".to_string(), &r.all)];
                rows.extend(r.by_difficulty.iter().map(|(l, p)| (format!("difficulty:{}", label_str(l)), p)));
                rows.extend(r.by_competency.iter().map(|(l, p)| (format!("competency:{}", label_str(l)), p)));
                write_csv(&csv_path, |f| export::write_performance(f, rows))?;
                out.files.extend([json, csv_path]);
            }
            ReportName::Labels => {
                if difficulty.is_none() && competency.is_none() {
                    out.warnings.push("labels report requested without --difficulty or --competency".into());
                }
                let json = dir.join("labels.json");
                write_json(
                    &json,
                    &LabelsReport {
                        difficulty: difficulty.as_ref(),
                        competency: competency.as_ref(),
                    },
                )?;
                out.files.push(json);
            }
        }
    }
    Ok(out)
}

fn label_str(l: &impl Serialize) -> String {
    serde_json::to_value(l)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}
