//! Per-learner sessions with an append-only event log, persisted as one JSON
//! document per session under `sessions/{id}.json`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curriculum::{CurriculumError, PerformanceMap, Provenance, Trigger};
use crate::pddl::Domain;
use crate::validator::PlanStep;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown session '{0}'")]
    UnknownSession(String),
    #[error("unknown domain '{0}'")]
    UnknownDomain(String),
    #[error("event at {event} precedes the last recorded event at {last}")]
    ClockRegression { last: DateTime<Utc>, event: DateTime<Utc> },
    #[error(transparent)]
    Performance(#[from] CurriculumError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
}

/// 128 random bits, hex encoded.
pub fn new_session_id() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    hex::encode(bytes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    /// Stable across sessions: the preset id, or provenance plus goal.
    pub task_id: String,
    pub provenance: Provenance,
    /// Preset the task is built on; generated tasks replace its goal.
    pub preset_id: String,
    pub goal: Vec<String>,
    pub trigger: Option<Trigger>,
    pub reference_plan_length: usize,
    pub witness: Vec<PlanStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewStep {
    pub index: usize,
    pub schema: String,
    /// Applicable in the working state the step was added to.
    pub applicable: bool,
    /// Filled in by the store from the pending hint.
    #[serde(default)]
    pub hinted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventPayload {
    PlanEdit {
        plan: Vec<PlanStep>,
        new_step: Option<NewStep>,
    },
    Validation {
        is_valid: bool,
        goal_achieved: bool,
        failures: usize,
    },
    HintRequested,
    HintShown {
        schema: String,
        action: String,
        visible: Vec<bool>,
    },
    Execute {
        steps: usize,
        goal_achieved: bool,
    },
    TaskSolved {
        task_id: String,
    },
    TaskGenerated {
        task: TaskRecord,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PlanEdit,
    Validation,
    HintRequested,
    HintShown,
    Execute,
    TaskSolved,
    TaskGenerated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub payload: EventPayload,
}

impl Event {
    pub fn now(payload: EventPayload) -> Self {
        Event {
            timestamp: Utc::now(),
            payload,
        }
    }

    pub fn kind(&self) -> EventKind {
        match self.payload {
            EventPayload::PlanEdit { .. } => EventKind::PlanEdit,
            EventPayload::Validation { .. } => EventKind::Validation,
            EventPayload::HintRequested => EventKind::HintRequested,
            EventPayload::HintShown { .. } => EventKind::HintShown,
            EventPayload::Execute { .. } => EventKind::Execute,
            EventPayload::TaskSolved { .. } => EventKind::TaskSolved,
            EventPayload::TaskGenerated { .. } => EventKind::TaskGenerated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub domain_name: String,
    pub current_task: Option<TaskRecord>,
    pub performance: PerformanceMap,
    pub history: Vec<Event>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    /// Schema of the last hint shown and not yet used.
    pub pending_hint: Option<String>,
    pub last_plan: Vec<PlanStep>,
}

impl Session {
    pub fn new(domain: &Domain) -> Self {
        let now = Utc::now();
        Session {
            session_id: new_session_id(),
            domain_name: domain.name.clone(),
            current_task: None,
            performance: PerformanceMap::cold_start(domain),
            history: Vec::new(),
            created_at: now,
            updated_at: now,
            pending_hint: None,
            last_plan: Vec::new(),
        }
    }

    /// Appends an event and applies its effect on the session.
    pub fn record(&mut self, mut event: Event) -> Result<(), SessionError> {
        let last = self.history.last().map(|e| e.timestamp).unwrap_or(self.created_at);
        if event.timestamp < last {
            return Err(SessionError::ClockRegression {
                last,
                event: event.timestamp,
            });
        }
        match &mut event.payload {
            EventPayload::PlanEdit { plan, new_step } => {
                if let Some(step) = new_step {
                    step.hinted = self.pending_hint.as_deref() == Some(step.schema.as_str());
                    self.performance
                        .record_use(&step.schema, step.applicable, step.hinted)?;
                    if step.hinted {
                        self.pending_hint = None;
                    }
                }
                self.last_plan = plan.clone();
            }
            EventPayload::HintShown { schema, .. } => self.pending_hint = Some(schema.clone()),
            EventPayload::TaskGenerated { task } => {
                self.current_task = Some(task.clone());
                self.last_plan.clear();
                self.pending_hint = None;
            }
            _ => {}
        }
        self.updated_at = event.timestamp;
        self.history.push(event);
        Ok(())
    }

    /// Rebuilds the performance map from the event log alone.
    pub fn replay_performance(&self, domain: &Domain) -> Result<PerformanceMap, SessionError> {
        let mut map = PerformanceMap::cold_start(domain);
        for e in &self.history {
            if let EventPayload::PlanEdit {
                new_step: Some(step), ..
            } = &e.payload
            {
                map.record_use(&step.schema, step.applicable, step.hinted)?;
            }
        }
        Ok(map)
    }

    /// Attempts in order: (task id, seconds to solve if solved, hints shown).
    pub fn task_attempts(&self) -> Vec<TaskAttempt> {
        let mut out: Vec<TaskAttempt> = Vec::new();
        let mut open: Option<(String, DateTime<Utc>, usize)> = None;
        for e in &self.history {
            match &e.payload {
                EventPayload::TaskGenerated { task } => {
                    if let Some((task_id, _, hints)) = open.take() {
                        out.push(TaskAttempt {
                            task_id,
                            solve_seconds: None,
                            hints_used: hints,
                        });
                    }
                    open = Some((task.task_id.clone(), e.timestamp, 0));
                }
                EventPayload::HintShown { .. } => {
                    if let Some(o) = open.as_mut() {
                        o.2 += 1;
                    }
                }
                EventPayload::TaskSolved { task_id } => {
                    if let Some((id, started, hints)) = open.take() {
                        if &id == task_id {
                            let ms = (e.timestamp - started).num_milliseconds();
                            out.push(TaskAttempt {
                                task_id: id,
                                solve_seconds: Some(ms as f64 / 1000.0),
                                hints_used: hints,
                            });
                        } else {
                            open = Some((id, started, hints));
                        }
                    }
                }
                _ => {}
            }
        }
        if let Some((task_id, _, hints)) = open {
            out.push(TaskAttempt {
                task_id,
                solve_seconds: None,
                hints_used: hints,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskAttempt {
    pub task_id: String,
    pub solve_seconds: Option<f64>,
    pub hints_used: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TaskStats {
    pub durations: Vec<f64>,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub solved: usize,
    pub unsolved: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveTimeReport {
    pub tasks: BTreeMap<String, TaskStats>,
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

/// Solve-time statistics per task id across sessions.
pub fn solve_time_report<'a>(sessions: impl IntoIterator<Item = &'a Session>) -> SolveTimeReport {
    let mut tasks: BTreeMap<String, TaskStats> = BTreeMap::new();
    for s in sessions {
        for attempt in s.task_attempts() {
            let stats = tasks.entry(attempt.task_id).or_default();
            match attempt.solve_seconds {
                Some(d) => {
                    stats.durations.push(d);
                    stats.solved += 1;
                }
                None => stats.unsolved += 1,
            }
        }
    }
    for stats in tasks.values_mut() {
        stats.durations.sort_by(f64::total_cmp);
        if !stats.durations.is_empty() {
            stats.mean = Some(stats.durations.iter().sum::<f64>() / stats.durations.len() as f64);
        }
        stats.median = median(&stats.durations);
    }
    SolveTimeReport { tasks }
}

/// CSV with columns session, task, solve_seconds, hints_used. Unsolved
/// attempts have an empty solve_seconds.
pub fn export_csv<'a, W: std::io::Write>(
    sessions: impl IntoIterator<Item = &'a Session>,
    out: W,
) -> Result<(), SessionError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["session", "task", "solve_seconds", "hints_used"])?;
    for s in sessions {
        for a in s.task_attempts() {
            let secs = a.solve_seconds.map(|d| format!("{d:.3}")).unwrap_or_default();
            w.write_record([s.session_id.as_str(), &a.task_id, &secs, &a.hints_used.to_string()])?;
        }
    }
    w.flush().map_err(|source| SessionError::Io {
        path: PathBuf::from("<csv>"),
        source,
    })?;
    Ok(())
}

pub type SessionHandle = Arc<Mutex<Session>>;

/// Session registry, optionally backed by a data directory.
#[derive(Debug, Default)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `data_dir/sessions`, creating it if needed, and loads every session.
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, SessionError> {
        let dir = data_dir.as_ref().join("sessions");
        fs::create_dir_all(&dir).map_err(|source| SessionError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut sessions = HashMap::new();
        let entries = fs::read_dir(&dir).map_err(|source| SessionError::Io {
            path: dir.clone(),
            source,
        })?;
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().is_some_and(|x| x == "json") {
                let s = load_session(&path)?;
                sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
            }
        }
        Ok(SessionStore {
            dir: Some(dir),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn create(&self, domain: &Domain) -> Result<Session, SessionError> {
        let session = Session::new(domain);
        self.persist(&session)?;
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(session.session_id.clone(), Arc::new(Mutex::new(session.clone())));
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<SessionHandle, SessionError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    /// Appends an event and persists the session.
    pub fn record_event(&self, id: &str, event: Event) -> Result<Session, SessionError> {
        let handle = self.get(id)?;
        let mut session = handle.lock().expect("session poisoned");
        self.record_locked(&mut session, event)?;
        Ok(session.clone())
    }

    /// Same as [`record_event`](Self::record_event) for a session the caller already locked.
    pub fn record_locked(&self, session: &mut Session, event: Event) -> Result<(), SessionError> {
        self.record_all_locked(session, [event])
    }

    /// Appends several events with a single write; either all are kept or none.
    pub fn record_all_locked(
        &self,
        session: &mut Session,
        events: impl IntoIterator<Item = Event>,
    ) -> Result<(), SessionError> {
        let mut updated = session.clone();
        for event in events {
            updated.record(event)?;
        }
        self.persist(&updated)?;
        *session = updated;
        Ok(())
    }

    pub fn snapshot(&self) -> Vec<Session> {
        let handles: Vec<SessionHandle> = self
            .sessions
            .read()
            .expect("session map poisoned")
            .values()
            .cloned()
            .collect();
        let mut out: Vec<Session> = handles
            .iter()
            .map(|h| h.lock().expect("session poisoned").clone())
            .collect();
        out.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then_with(|| a.session_id.cmp(&b.session_id))
        });
        out
    }

    pub fn persist(&self, session: &Session) -> Result<(), SessionError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let path = dir.join(format!("{}.json", session.session_id));
        let io = |source| SessionError::Io {
            path: path.clone(),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        serde_json::to_writer_pretty(&mut tmp, session).map_err(|source| SessionError::Json {
            path: path.clone(),
            source,
        })?;
        tmp.write_all(b"\n").map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        Ok(())
    }
}

pub fn load_session(path: &Path) -> Result<Session, SessionError> {
    let text = fs::read_to_string(path).map_err(|source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| SessionError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads every session JSON in `data_dir/sessions`.
pub fn load_sessions(data_dir: impl AsRef<Path>) -> Result<Vec<Session>, SessionError> {
    Ok(SessionStore::open(data_dir)?.snapshot())
}
