//! Projection of a whole event log into per-session state.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::event::{Event, EventBody};
use crate::session::{SessionError, SessionState};
use crate::types::{HintId, QuotaPolicy, SessionKey, StudentId, Timestamp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("event seq {got} is not greater than last seq {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error("hint `{0}` is already delivered in another session")]
    DuplicateHint(HintId),
    #[error("event seq {seq}: {source}")]
    Session {
        seq: u64,
        #[source]
        source: SessionError,
    },
}

impl ReplayError {
    pub fn session_error(&self) -> Option<&SessionError> {
        match self {
            ReplayError::Session { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// A validated event, ready to be committed to the [`LogState`] it was prepared against.
#[derive(Debug, Clone)]
pub struct Prepared {
    seq: u64,
    at: Timestamp,
    updates: Vec<(SessionKey, SessionState)>,
    new_hint: Option<HintId>,
    consent: Option<StudentId>,
}

/// All sessions reconstructed from a log, plus the indexes the service needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogState {
    policy: QuotaPolicy,
    consented: BTreeSet<StudentId>,
    sessions: BTreeMap<SessionKey, SessionState>,
    hint_index: BTreeMap<HintId, SessionKey>,
    last_seq: Option<u64>,
    last_at: Option<Timestamp>,
}

impl LogState {
    pub fn new(policy: QuotaPolicy) -> Self {
        Self {
            policy,
            consented: BTreeSet::new(),
            sessions: BTreeMap::new(),
            hint_index: BTreeMap::new(),
            last_seq: None,
            last_at: None,
        }
    }

    /// Folds `events` in order. Stops at the first invalid event.
    pub fn replay<'a>(
        events: impl IntoIterator<Item = &'a Event>,
        policy: QuotaPolicy,
    ) -> Result<Self, ReplayError> {
        let mut state = Self::new(policy);
        for event in events {
            state.apply(event)?;
        }
        Ok(state)
    }

    pub fn policy(&self) -> &QuotaPolicy {
        &self.policy
    }

    /// Applies one event. On error nothing changes.
    pub fn apply(&mut self, event: &Event) -> Result<(), ReplayError> {
        let prepared = self.prepare(event)?;
        self.commit(prepared);
        Ok(())
    }

    /// Validates `event` against the current state without changing it. The
    /// result can be committed with [`commit`](Self::commit) as long as no other
    /// event is applied in between.
    pub fn prepare(&self, event: &Event) -> Result<Prepared, ReplayError> {
        if let Some(last) = self.last_seq {
            if event.seq <= last {
                return Err(ReplayError::OutOfOrder { last, got: event.seq });
            }
        }
        let wrap = |source| ReplayError::Session { seq: event.seq, source };

        let mut updates = Vec::new();
        let mut new_hint = None;
        let mut consent = None;
        match event.body.session_key() {
            None => {
                let student = event.body.student_id();
                for (key, session) in self.sessions.iter().filter(|(k, _)| &k.student_id == student) {
                    updates.push((key.clone(), session.apply_event(event, &self.policy).map_err(wrap)?));
                }
                consent = Some(student.clone());
            }
            Some(key) => {
                if let EventBody::HintDelivered(hint) = &event.body {
                    if self.hint_index.contains_key(&hint.hint_id) {
                        return Err(ReplayError::DuplicateHint(hint.hint_id.clone()));
                    }
                    new_hint = Some(hint.hint_id.clone());
                }
                let next = match self.sessions.get(&key) {
                    Some(existing) => existing.apply_event(event, &self.policy),
                    None => {
                        let mut fresh = SessionState::for_key(&key);
                        fresh.consent_given = self.consented.contains(&key.student_id);
                        fresh.apply_in_place(event, &self.policy).map(|_| fresh)
                    }
                }
                .map_err(wrap)?;
                updates.push((key, next));
            }
        }
        Ok(Prepared {
            seq: event.seq,
            at: event.at,
            updates,
            new_hint,
            consent,
        })
    }

    pub fn commit(&mut self, prepared: Prepared) {
        if let Some(hint_id) = prepared.new_hint {
            if let Some((key, _)) = prepared.updates.first() {
                self.hint_index.insert(hint_id, key.clone());
            }
        }
        for (key, session) in prepared.updates {
            self.sessions.insert(key, session);
        }
        if let Some(student) = prepared.consent {
            self.consented.insert(student);
        }
        self.last_seq = Some(prepared.seq);
        self.last_at = Some(self.last_at.map_or(prepared.at, |t| t.max(prepared.at)));
    }

    pub fn has_consent(&self, student: &StudentId) -> bool {
        self.consented.contains(student)
    }

    pub fn session(&self, key: &SessionKey) -> Option<&SessionState> {
        self.sessions.get(key)
    }

    /// The stored session, or an empty one carrying the student's consent flag.
    pub fn session_or_empty(&self, key: &SessionKey) -> SessionState {
        self.sessions.get(key).cloned().unwrap_or_else(|| {
            let mut fresh = SessionState::for_key(key);
            fresh.consent_given = self.has_consent(&key.student_id);
            fresh
        })
    }

    pub fn sessions(&self) -> impl Iterator<Item = &SessionState> {
        self.sessions.values()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn locate_hint(&self, hint_id: &HintId) -> Option<&SessionKey> {
        self.hint_index.get(hint_id)
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.last_seq
    }

    pub fn next_seq(&self) -> u64 {
        self.last_seq.map_or(1, |s| s + 1)
    }

    pub fn last_at(&self) -> Option<Timestamp> {
        self.last_at
    }
}
