use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::http::StatusCode;
use featacq::acquisition::{AcquisitionSession, SessionStatus, Suggestion};
use uuid::Uuid;

use crate::api::{ApiError, SessionSnapshot};

pub const DEFAULT_TTL: Duration = Duration::from_secs(24 * 60 * 60);

/// A live session plus the suggestion computed after its last write, so
/// reads never have to recompute (and mutate) anything.
#[derive(Debug)]
pub struct SessionEntry {
    pub id: String,
    pub created_at: u64,
    pub model_tag: String,
    pub session: AcquisitionSession,
    pub suggestion: Option<Suggestion>,
    touched: Instant,
}

impl SessionEntry {
    /// Builds the entry and computes the first suggestion.
    pub fn start(model_tag: String, mut session: AcquisitionSession) -> featacq::Result<Self> {
        let suggestion = next_suggestion(&mut session)?;
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        Ok(Self {
            id: Uuid::new_v4().to_string(),
            created_at,
            model_tag,
            session,
            suggestion,
            touched: Instant::now(),
        })
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        let s = &self.session;
        SessionSnapshot {
            session_id: self.id.clone(),
            created_at: self.created_at,
            model_tag: self.model_tag.clone(),
            policy: s.policy().tag().to_string(),
            status: s.status(),
            stop_reason: s.status().stop_reason().map(str::to_string),
            budget: s.budget(),
            remaining_budget: s.remaining_budget(),
            accumulated_cost: s.accumulated_cost(),
            initial_posterior: s.initial_posterior().to_vec(),
            posterior: s.posterior().to_vec(),
            predicted_class: s.predicted_class(),
            history: s.history().to_vec(),
            suggestion: self.suggestion.clone(),
        }
    }
}

pub fn next_suggestion(session: &mut AcquisitionSession) -> featacq::Result<Option<Suggestion>> {
    match session.status() {
        SessionStatus::Active => session.suggest_next().map(Some),
        _ => Ok(None),
    }
}

enum Slot {
    Live(Arc<Mutex<SessionEntry>>),
    Evicted,
}

/// In-memory sessions keyed by id. Entries idle for longer than the TTL are
/// replaced by tombstones, so a stale id answers 410 rather than 404.
pub struct SessionStore {
    ttl: Duration,
    slots: Mutex<HashMap<String, Slot>>,
}

impl Default for SessionStore {
    fn default() -> Self {
        Self::new(DEFAULT_TTL)
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // A panic mid-write leaves a consistent map; keep serving.
    m.lock().unwrap_or_else(|p| p.into_inner())
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            slots: Mutex::new(HashMap::new()),
        }
    }

    pub fn insert(&self, entry: SessionEntry) -> Arc<Mutex<SessionEntry>> {
        self.sweep();
        let id = entry.id.clone();
        let shared = Arc::new(Mutex::new(entry));
        lock(&self.slots).insert(id, Slot::Live(shared.clone()));
        shared
    }

    /// Looks up a live session and marks it used. The caller then locks the
    /// entry itself, which serializes writes per session.
    pub fn get(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        let mut slots = lock(&self.slots);
        let shared = match slots.get(id) {
            None => return Err(ApiError::not_found(format!("no session {id}"))),
            Some(Slot::Evicted) => return Err(gone(id)),
            Some(Slot::Live(s)) => s.clone(),
        };
        let expired = match shared.try_lock() {
            Ok(mut e) => {
                let idle = e.touched.elapsed() > self.ttl;
                e.touched = Instant::now();
                idle
            }
            // Busy with another request, so not idle.
            Err(_) => false,
        };
        if expired {
            slots.insert(id.to_string(), Slot::Evicted);
            return Err(gone(id));
        }
        Ok(shared)
    }

    /// Replaces idle sessions with tombstones.
    pub fn sweep(&self) {
        let ttl = self.ttl;
        for slot in lock(&self.slots).values_mut() {
            if let Slot::Live(s) = slot {
                if s.try_lock().is_ok_and(|e| e.touched.elapsed() > ttl) {
                    *slot = Slot::Evicted;
                }
            }
        }
    }

    pub fn live_count(&self) -> usize {
        lock(&self.slots).values().filter(|s| matches!(s, Slot::Live(_))).count()
    }
}

fn gone(id: &str) -> ApiError {
    ApiError::new(StatusCode::GONE, "gone", format!("session {id} expired"))
}

pub(crate) fn lock_entry(entry: &Mutex<SessionEntry>) -> MutexGuard<'_, SessionEntry> {
    lock(entry)
}
