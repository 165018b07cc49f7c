//! Hint sequences per (student, question) pair.

use std::collections::{BTreeMap, BTreeSet};

use metahint_core::{Event, EventBody, HintType, QuestionId, SessionKey};
use serde::{Deserialize, Serialize};

/// Counts keyed by hint type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCounts {
    pub planning: u64,
    pub debugging: u64,
    pub optimization: u64,
}

impl TypeCounts {
    pub fn get(&self, t: HintType) -> u64 {
        match t {
            HintType::Planning => self.planning,
            HintType::Debugging => self.debugging,
            HintType::Optimization => self.optimization,
        }
    }

    pub fn add(&mut self, t: HintType, n: u64) {
        match t {
            HintType::Planning => self.planning += n,
            HintType::Debugging => self.debugging += n,
            HintType::Optimization => self.optimization += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.planning + self.debugging + self.optimization
    }
}

/// Ordered hint types per pair, from `HintDelivered` events in `seq` order.
/// Pairs without a delivered hint are absent.
pub fn hint_sequences(events: &[Event]) -> BTreeMap<SessionKey, Vec<HintType>> {
    let mut delivered: Vec<&Event> = events
        .iter()
        .filter(|e| matches!(e.body, EventBody::HintDelivered(_)))
        .collect();
    delivered.sort_by_key(|e| e.seq);
    let mut out: BTreeMap<SessionKey, Vec<HintType>> = BTreeMap::new();
    for e in delivered {
        if let EventBody::HintDelivered(hint) = &e.body {
            out.entry(hint.session_key()).or_default().push(hint.hint_type());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSummary {
    pub sequence: Vec<HintType>,
    pub types_present: BTreeSet<HintType>,
    pub first_type: Option<HintType>,
    /// Set only when one type's count strictly exceeds every other's.
    pub majority_type: Option<HintType>,
}

impl SequenceSummary {
    pub fn of(sequence: &[HintType]) -> Self {
        let mut counts = TypeCounts::default();
        for &t in sequence {
            counts.add(t, 1);
        }
        let best = HintType::ALL.iter().map(|&t| counts.get(t)).max().unwrap_or(0);
        let leaders: Vec<HintType> = HintType::ALL.into_iter().filter(|&t| counts.get(t) == best).collect();
        Self {
            sequence: sequence.to_vec(),
            types_present: sequence.iter().copied().collect(),
            first_type: sequence.first().copied(),
            majority_type: (best > 0 && leaders.len() == 1).then(|| leaders[0]),
        }
    }
}

/// Compact label such as `P-D-D`.
pub fn sequence_label(sequence: &[HintType]) -> String {
    sequence.iter().map(|t| t.letter().to_string()).collect::<Vec<_>>().join("-")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceCount {
    pub sequence: String,
    pub count: u64,
}

/// One edge of the flow diagram. Nodes are `start`, `end`, or `{position}:{letter}`
/// with 1-based positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowLink {
    pub source: String,
    pub target: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceStats {
    pub pair_count: u64,
    pub total_hints: u64,
    pub type_totals: TypeCounts,
    /// Each type counted once per pair in which it occurs.
    pub present_counts: TypeCounts,
    pub first_counts: TypeCounts,
    pub majority_counts: TypeCounts,
    pub no_majority_pairs: u64,
    /// Most frequent first; ties by label.
    pub sequence_frequency_table: Vec<SequenceCount>,
    pub transition_flows: Vec<FlowLink>,
}

pub fn sequence_stats(events: &[Event]) -> SequenceStats {
    stats_from_sequences(hint_sequences(events).values())
}

pub fn stats_from_sequences<'a>(sequences: impl IntoIterator<Item = &'a Vec<HintType>>) -> SequenceStats {
    let mut stats = SequenceStats {
        pair_count: 0,
        total_hints: 0,
        type_totals: TypeCounts::default(),
        present_counts: TypeCounts::default(),
        first_counts: TypeCounts::default(),
        majority_counts: TypeCounts::default(),
        no_majority_pairs: 0,
        sequence_frequency_table: Vec::new(),
        transition_flows: Vec::new(),
    };
    let mut freq: BTreeMap<String, u64> = BTreeMap::new();
    let mut flows: BTreeMap<(String, String), u64> = BTreeMap::new();

    for seq in sequences {
        if seq.is_empty() {
            continue;
        }
        let summary = SequenceSummary::of(seq);
        stats.pair_count += 1;
        stats.total_hints += seq.len() as u64;
        for &t in seq {
            stats.type_totals.add(t, 1);
        }
        for &t in &summary.types_present {
            stats.present_counts.add(t, 1);
        }
        if let Some(t) = summary.first_type {
            stats.first_counts.add(t, 1);
        }
        match summary.majority_type {
            Some(t) => stats.majority_counts.add(t, 1),
            None => stats.no_majority_pairs += 1,
        }
        *freq.entry(sequence_label(seq)).or_default() += 1;

        let mut prev = "start".to_string();
        for (i, t) in seq.iter().enumerate() {
            let node = format!("{}:{}", i + 1, t.letter());
            *flows.entry((prev, node.clone())).or_default() += 1;
            prev = node;
        }
        *flows.entry((prev, "end".to_string())).or_default() += 1;
    }

    stats.sequence_frequency_table = freq
        .into_iter()
        .map(|(sequence, count)| SequenceCount { sequence, count })
        .collect();
    stats
        .sequence_frequency_table
        .sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.sequence.cmp(&b.sequence)));
    stats.transition_flows = flows
        .into_iter()
        .map(|((source, target), count)| FlowLink { source, target, count })
        .collect();
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolatedFraction {
    pub hint_type: HintType,
    /// Hints of the type in pairs whose sequence holds only that type.
    pub numerator: u64,
    /// All hints of the type.
    pub denominator: u64,
    /// 0 when the denominator is 0.
    pub fraction: f64,
    pub empty_denominator: bool,
}

pub fn isolated_type_fraction(events: &[Event], hint_type: HintType) -> IsolatedFraction {
    isolated_from_sequences(hint_sequences(events).values(), hint_type)
}

pub fn isolated_from_sequences<'a>(
    sequences: impl IntoIterator<Item = &'a Vec<HintType>>,
    hint_type: HintType,
) -> IsolatedFraction {
    let (mut numerator, mut denominator) = (0u64, 0u64);
    for seq in sequences {
        let n = seq.iter().filter(|&&t| t == hint_type).count() as u64;
        denominator += n;
        if n as usize == seq.len() {
            numerator += n;
        }
    }
    IsolatedFraction {
        hint_type,
        numerator,
        denominator,
        fraction: if denominator == 0 { 0.0 } else { numerator as f64 / denominator as f64 },
        empty_denominator: denominator == 0,
    }
}

/// Delivered hints per question and type (stacked-bar export).
pub fn type_counts_per_question(events: &[Event]) -> BTreeMap<QuestionId, TypeCounts> {
    let mut out: BTreeMap<QuestionId, TypeCounts> = BTreeMap::new();
    for e in events {
        if let EventBody::HintDelivered(hint) = &e.body {
            out.entry(hint.request.question_id.clone()).or_default().add(hint.hint_type(), 1);
        }
    }
    out
}
