//! Tabular exports for external plotting.

use std::io::Write;

use crate::performance::PerformanceReport;
use crate::sequences::{FlowLink, TypeCounts};
use metahint_core::QuestionId;
use std::collections::BTreeMap;

pub fn write_flows(out: impl Write, flows: &[FlowLink]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "target", "count"])?;
    for f in flows {
        w.write_record([f.source.as_str(), f.target.as_str(), &f.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_type_counts(out: impl Write, counts: &BTreeMap<QuestionId, TypeCounts>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["question_id", "planning", "debugging", "optimization"])?;
    for (q, c) in counts {
        w.write_record([
            q.as_str(),
            &c.planning.to_string(),
            &c.debugging.to_string(),
            &c.optimization.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// One row per bar; `filter` labels the subset (e.g. `all`, `easier`).
pub fn write_performance<'a>(
    out: impl Write,
    reports: impl IntoIterator<Item = (String, &'a PerformanceReport)>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["filter", "group", "n", "solved", "rate", "standard_error", "chi_square", "p_value", "marker"])?;
    for (filter, report) in reports {
        for b in &report.bars {
            let group = serde_json::to_value(b.group).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            w.write_record([
                filter.clone(),
                group,
                b.n.to_string(),
                b.solved.to_string(),
                opt(b.rate),
                opt(b.standard_error),
                opt(b.chi_square),
                opt(b.p_value),
                b.marker.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
