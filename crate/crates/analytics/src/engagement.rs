//! Contemplation time, revisits and ratings per hint.

use std::collections::{BTreeMap, HashMap};

use metahint_core::{Event, EventBody, HintId, HintType, Rating, SessionKey};
use serde::{Deserialize, Serialize};

use crate::config::AnalyticsConfig;
use crate::sequences::TypeCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contemplation {
    pub hint_id: HintId,
    pub hint_type: HintType,
    pub duration_secs: f64,
}

fn by_seq(events: &[Event]) -> Vec<&Event> {
    let mut sorted: Vec<&Event> = events.iter().collect();
    sorted.sort_by_key(|e| e.seq);
    sorted
}

/// Time from each delivery to the next hint request or submission in the
/// same session. Hints without a later action, negative gaps and gaps above
/// the cutoff are left out.
pub fn contemplation_times(events: &[Event], cfg: &AnalyticsConfig) -> Vec<Contemplation> {
    let sorted = by_seq(events);
    let mut pending: HashMap<SessionKey, Vec<(HintId, HintType, metahint_core::Timestamp)>> = HashMap::new();
    let mut out = Vec::new();
    for e in sorted {
        match &e.body {
            EventBody::HintDelivered(hint) => pending.entry(hint.session_key()).or_default().push((
                hint.hint_id.clone(),
                hint.hint_type(),
                hint.delivered_at,
            )),
            EventBody::HintRequested(_) | EventBody::SubmissionMade { .. } => {
                let Some(key) = e.body.session_key() else { continue };
                let Some(waiting) = pending.remove(&key) else { continue };
                let action = e.action_time();
                for (hint_id, hint_type, delivered_at) in waiting {
                    let secs = (action - delivered_at).num_milliseconds() as f64 / 1000.0;
                    if secs >= 0.0 && secs <= cfg.contemplation_cutoff_secs {
                        out.push(Contemplation {
                            hint_id,
                            hint_type,
                            duration_secs: secs,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintEngagement {
    pub hint_id: HintId,
    pub hint_type: HintType,
    /// Every expansion counts, including repeats.
    pub revisits: u64,
    /// Latest rating wins.
    pub rating: Rating,
}

/// One entry per delivered hint, in delivery order.
pub fn hint_engagement(events: &[Event]) -> Vec<HintEngagement> {
    let sorted = by_seq(events);
    let mut index: HashMap<HintId, usize> = HashMap::new();
    let mut out: Vec<HintEngagement> = Vec::new();
    for e in sorted {
        match &e.body {
            EventBody::HintDelivered(hint) => {
                index.insert(hint.hint_id.clone(), out.len());
                out.push(HintEngagement {
                    hint_id: hint.hint_id.clone(),
                    hint_type: hint.hint_type(),
                    revisits: 0,
                    rating: Rating::Unrated,
                });
            }
            EventBody::HintRevisited { hint_id, .. } => {
                if let Some(&i) = index.get(hint_id) {
                    out[i].revisits += 1;
                }
            }
            EventBody::HintRated { hint_id, rating, .. } => {
                if let Some(&i) = index.get(hint_id) {
                    out[i].rating = (*rating).into();
                }
            }
            _ => {}
        }
    }
    out
}

pub fn revisit_totals(events: &[Event]) -> TypeCounts {
    let mut totals = TypeCounts::default();
    for h in hint_engagement(events) {
        totals.add(h.hint_type, h.revisits);
    }
    totals
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingCounts {
    pub up: u64,
    pub down: u64,
    pub unrated: u64,
}

pub fn rating_counts(events: &[Event]) -> BTreeMap<HintType, RatingCounts> {
    let mut out: BTreeMap<HintType, RatingCounts> = HintType::ALL.iter().map(|&t| (t, RatingCounts::default())).collect();
    for h in hint_engagement(events) {
        let c = out.get_mut(&h.hint_type).expect("all types present");
        match h.rating {
            Rating::Up => c.up += 1,
            Rating::Down => c.down += 1,
            Rating::Unrated => c.unrated += 1,
        }
    }
    out
}
