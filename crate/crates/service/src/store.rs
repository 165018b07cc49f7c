use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use metahint_core::{
    check_quota, now_millis, read_log, Event, EventBody, EventLogWriter, Hint, HintId, HintRequest, LogError,
    LogState, QuotaPolicy, ReplayError, SessionKey, SessionState, StudentId, ThumbRating, Timestamp,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("existing event log is inconsistent: {0}")]
    Corrupt(ReplayError),
    #[error("event rejected: {0}")]
    Rejected(ReplayError),
    #[error("student has not given consent")]
    ConsentRequired,
    #[error("hint quota exhausted")]
    QuotaExhausted,
    #[error("unknown hint `{0}`")]
    UnknownHint(HintId),
}

pub type Clock = Box<dyn Fn() -> Timestamp + Send + Sync>;

struct Inner {
    writer: EventLogWriter,
    state: LogState,
    /// Hint generations in progress per session; they hold quota.
    in_flight: HashMap<SessionKey, u32>,
}

/// Append-only event log plus its in-memory projection. Every append is
/// validated against the projection before it is written, under one lock, so
/// the file and the projection never disagree.
pub struct EventStore {
    inner: Mutex<Inner>,
    clock: Clock,
}

/// Quota held by one in-progress hint generation. Dropping it releases the
/// quota without delivering.
pub struct Reservation {
    store: Arc<EventStore>,
    key: SessionKey,
    request: HintRequest,
    active: bool,
}

impl Reservation {
    pub fn request(&self) -> &HintRequest {
        &self.request
    }

    /// Records the delivery and returns the stored hint and the remaining quota.
    pub fn deliver(mut self, mut hint: Hint) -> Result<(Hint, u32), StoreError> {
        self.active = false;
        let store = Arc::clone(&self.store);
        let mut inner = store.lock();
        release(&mut inner, &self.key);
        hint.request = self.request.clone();
        let event = store.append_locked(&mut inner, |at| {
            hint.delivered_at = at.max(hint.request.requested_at);
            EventBody::HintDelivered(hint.clone())
        })?;
        let remaining = remaining_locked(&inner, &self.key);
        drop(inner);
        match event.body {
            EventBody::HintDelivered(hint) => Ok((hint, remaining)),
            _ => unreachable!("appended a delivery"),
        }
    }
}

impl Drop for Reservation {
    fn drop(&mut self) {
        if self.active {
            release(&mut self.store.lock(), &self.key);
        }
    }
}

fn release(inner: &mut Inner, key: &SessionKey) {
    if let Some(n) = inner.in_flight.get_mut(key) {
        *n -= 1;
        if *n == 0 {
            inner.in_flight.remove(key);
        }
    }
}

fn remaining_locked(inner: &Inner, key: &SessionKey) -> u32 {
    let session = inner.state.session_or_empty(key);
    let held = inner.in_flight.get(key).copied().unwrap_or(0);
    check_quota(&session, inner.state.policy()).saturating_sub(held)
}

impl EventStore {
    /// Opens (or creates) the log at `path` and replays it.
    pub fn open(path: impl AsRef<Path>, policy: QuotaPolicy) -> Result<Self, StoreError> {
        Self::open_with_clock(path, policy, Box::new(now_millis))
    }

    pub fn open_with_clock(path: impl AsRef<Path>, policy: QuotaPolicy, clock: Clock) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let events = if path.exists() { read_log(path)? } else { Vec::new() };
        let state = LogState::replay(&events, policy).map_err(StoreError::Corrupt)?;
        let writer = EventLogWriter::open(path)?;
        tracing::info!(path = %path.display(), events = events.len(), "event log replayed");
        Ok(Self {
            inner: Mutex::new(Inner {
                writer,
                state,
                in_flight: HashMap::new(),
            }),
            clock,
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn append_locked(&self, inner: &mut Inner, body: impl FnOnce(Timestamp) -> EventBody) -> Result<Event, StoreError> {
        let at = match inner.state.last_at() {
            Some(last) => (self.clock)().max(last),
            None => (self.clock)(),
        };
        let event = Event::new(inner.state.next_seq(), at, body(at));
        let prepared = inner.state.prepare(&event).map_err(StoreError::Rejected)?;
        inner.writer.append(&event)?;
        inner.state.commit(prepared);
        Ok(event)
    }

    /// Records consent once; later calls are no-ops. Returns whether an event was written.
    pub fn give_consent(&self, student: &StudentId) -> Result<bool, StoreError> {
        let mut inner = self.lock();
        if inner.state.has_consent(student) {
            return Ok(false);
        }
        self.append_locked(&mut inner, |_| EventBody::ConsentGiven {
            student_id: student.clone(),
        })?;
        Ok(true)
    }

    /// Checks consent and quota, stamps and logs the request, and holds one
    /// unit of quota until the reservation is delivered or dropped.
    pub fn begin_hint(self: &Arc<Self>, mut request: HintRequest) -> Result<Reservation, StoreError> {
        let key = request.session_key();
        let mut inner = self.lock();
        if !inner.state.has_consent(&request.student_id) {
            return Err(StoreError::ConsentRequired);
        }
        if remaining_locked(&inner, &key) == 0 {
            return Err(StoreError::QuotaExhausted);
        }
        let event = self.append_locked(&mut inner, |at| {
            request.requested_at = at;
            EventBody::HintRequested(request.clone())
        })?;
        *inner.in_flight.entry(key.clone()).or_insert(0) += 1;
        drop(inner);
        let request = match event.body {
            EventBody::HintRequested(r) => r,
            _ => unreachable!("appended a request"),
        };
        Ok(Reservation {
            store: Arc::clone(self),
            key,
            request,
            active: true,
        })
    }

    pub fn rate(&self, hint_id: &HintId, rating: ThumbRating) -> Result<Event, StoreError> {
        let mut inner = self.lock();
        let key = inner
            .state
            .locate_hint(hint_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownHint(hint_id.clone()))?;
        self.append_locked(&mut inner, |_| EventBody::HintRated {
            student_id: key.student_id,
            question_id: key.question_id,
            hint_id: hint_id.clone(),
            rating,
        })
    }

    pub fn revisit(&self, hint_id: &HintId) -> Result<(Event, u32), StoreError> {
        let mut inner = self.lock();
        let key = inner
            .state
            .locate_hint(hint_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownHint(hint_id.clone()))?;
        let event = self.append_locked(&mut inner, |_| EventBody::HintRevisited {
            student_id: key.student_id.clone(),
            question_id: key.question_id.clone(),
            hint_id: hint_id.clone(),
        })?;
        let count = inner
            .state
            .session(&key)
            .and_then(|s| s.revisit_count_per_hint.get(hint_id).copied())
            .unwrap_or(0);
        Ok((event, count))
    }

    /// Records a graded submission and returns the updated session.
    pub fn submit(&self, key: &SessionKey, score: f64, tests_passed: u32, tests_total: u32) -> Result<SessionState, StoreError> {
        let mut inner = self.lock();
        self.append_locked(&mut inner, |_| EventBody::SubmissionMade {
            student_id: key.student_id.clone(),
            question_id: key.question_id.clone(),
            score,
            tests_passed,
            tests_total,
        })?;
        Ok(inner.state.session_or_empty(key))
    }

    /// Session as reconstructed from the log (in-flight generations excluded).
    pub fn session(&self, key: &SessionKey) -> SessionState {
        self.lock().state.session_or_empty(key)
    }

    pub fn policy(&self) -> QuotaPolicy {
        *self.lock().state.policy()
    }

    pub fn session_keys(&self) -> Vec<SessionKey> {
        self.lock().state.sessions().map(SessionState::key).collect()
    }

    pub fn event_count(&self) -> u64 {
        self.lock().state.last_seq().unwrap_or(0)
    }
}
