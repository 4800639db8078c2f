//! Multi-session persistence around the engine.
//!
//! Every user owns an append-only event log. On open, each log is replayed
//! through the engine and the rebuilt outputs are compared with the recorded
//! ones, so a store that replays cleanly is known to reproduce its sessions.

mod store;

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use chrono::{DateTime, FixedOffset, TimeZone, Utc};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::content::{compose_curriculum, CurriculumError, Tier, SESSIONS};
use crate::dialogue::{AgentOutput, Engine, OutputKind, SessionError, SessionState};
use crate::evalkit::{Condition, Speaker, Transcript};
use crate::transduction::GistClause;

use store::Store;
pub use store::{Event, EventKind, UserRecord};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("name must not be empty")]
    EmptyName,
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} is over")]
    SessionOver(String),
    #[error("user {0:?} has completed all {SESSIONS} sessions")]
    ProgramComplete(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("replay of session {session:?} diverged: {detail}")]
    ReplayDivergence { session: String, detail: String },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
}

/// Source of event timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<FixedOffset>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<FixedOffset> {
        Utc::now().fixed_offset()
    }
}

/// A clock that starts at a fixed instant and ticks one second per reading.
#[derive(Debug)]
pub struct ManualClock {
    millis: AtomicI64,
}

impl ManualClock {
    pub fn starting_at(start: DateTime<FixedOffset>) -> Self {
        ManualClock {
            millis: AtomicI64::new(start.timestamp_millis()),
        }
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        ManualClock::starting_at(Utc.with_ymd_and_hms(2024, 1, 1, 9, 0, 0).unwrap().fixed_offset())
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<FixedOffset> {
        let ms = self.millis.fetch_add(1000, Ordering::SeqCst);
        Utc.timestamp_millis_opt(ms).unwrap().fixed_offset()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Derive user ids and seeds from this value instead of OS entropy.
    pub base_seed: Option<u64>,
    /// Skip fsync after writes. Only for tests and benchmarks.
    pub no_sync: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStart {
    pub session_id: String,
    pub session_index: usize,
    /// True when an open session was picked up instead of a new one.
    pub resumed: bool,
    pub output: AgentOutput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicInfo {
    pub id: String,
    pub title: String,
    pub tier: Tier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextSession {
    pub index: usize,
    pub topics: Vec<TopicInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub user_id: String,
    pub name: String,
    pub sessions_completed: usize,
    pub total_sessions: usize,
    pub next_session: Option<NextSession>,
}

#[derive(Debug, Clone)]
struct LiveSession {
    state: SessionState,
    last_output: AgentOutput,
    ended: bool,
}

#[derive(Debug)]
struct UserSlot {
    record: UserRecord,
    events: Vec<Event>,
    sessions: BTreeMap<usize, LiveSession>,
    /// Gists from completed sessions, handed to the next one.
    memory: Vec<GistClause>,
}

pub struct Service {
    engine: Engine,
    store: Store,
    clock: Arc<dyn Clock>,
    config: ServiceConfig,
    users: RwLock<BTreeMap<String, Arc<Mutex<UserSlot>>>>,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service")
            .field("store", &self.store)
            .finish_non_exhaustive()
    }
}

pub fn session_id(user_id: &str, index: usize) -> String {
    format!("{user_id}-{index}")
}

fn parse_session_id(id: &str) -> Option<(&str, usize)> {
    let (user, index) = id.rsplit_once('-')?;
    Some((user, index.parse().ok()?))
}

impl Service {
    /// Opens a store directory and replays every user's log.
    pub fn open(
        engine: Engine,
        root: &Path,
        config: ServiceConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Service, ServiceError> {
        let store = Store::open(root, !config.no_sync)?;
        let service = Service {
            engine,
            store,
            clock,
            config,
            users: RwLock::new(BTreeMap::new()),
        };
        let mut users = BTreeMap::new();
        for user_id in service.store.user_ids()? {
            let slot = service.replay_user(&user_id)?;
            users.insert(user_id, Arc::new(Mutex::new(slot)));
        }
        *service.users.write().unwrap_or_else(|e| e.into_inner()) = users;
        Ok(service)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn create_user(&self, name: &str) -> Result<String, ServiceError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ServiceError::EmptyName);
        }
        let mut users = self.users.write().unwrap_or_else(|e| e.into_inner());
        let mut rng: Box<dyn RngCore> = match self.config.base_seed {
            Some(base) => Box::new(ChaCha8Rng::seed_from_u64(
                base ^ (users.len() as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            )),
            None => Box::new(rand::rng()),
        };
        let user_id = loop {
            let id = uuid::Builder::from_random_bytes(rng.random())
                .into_uuid()
                .simple()
                .to_string();
            if !users.contains_key(&id) {
                break id;
            }
        };
        let curriculum_seed = rng.random();
        let curriculum = compose_curriculum(&self.engine.content().topics, curriculum_seed)?;
        let record = UserRecord {
            user_id: user_id.clone(),
            name: name.to_string(),
            sessions_completed: 0,
            next_session_index: 1,
            curriculum_seed,
            curriculum,
            session_seeds: (0..SESSIONS).map(|_| rng.random()).collect(),
        };
        self.store.write_user(&record)?;
        users.insert(
            user_id.clone(),
            Arc::new(Mutex::new(UserSlot {
                record,
                events: Vec::new(),
                sessions: BTreeMap::new(),
                memory: Vec::new(),
            })),
        );
        Ok(user_id)
    }

    /// Opens the user's next session, or returns the open one.
    pub fn start_session(&self, user_id: &str) -> Result<SessionStart, ServiceError> {
        let slot = self.slot(user_id)?;
        let mut slot = lock(&slot);
        if let Some((&index, live)) = slot.sessions.iter().find(|(_, s)| !s.ended) {
            return Ok(SessionStart {
                session_id: session_id(user_id, index),
                session_index: index,
                resumed: true,
                output: live.last_output.clone(),
            });
        }
        if slot.record.sessions_completed >= SESSIONS {
            return Err(ServiceError::ProgramComplete(user_id.to_string()));
        }
        let index = slot.record.sessions_completed + 1;
        let seed = slot.record.session_seeds[index - 1];
        let prior = slot.memory.clone();
        let (state, output) =
            self.engine
                .start_session_with_memory(user_id, &slot.record.curriculum, index, seed, prior.clone())?;
        let id = session_id(user_id, index);
        self.append(
            &mut slot,
            EventKind::SessionStarted {
                session_id: id.clone(),
                session_index: index,
                seed,
                prior_memory: prior,
            },
        )?;
        self.append(
            &mut slot,
            EventKind::AgentOutput {
                session_id: id.clone(),
                output: output.clone(),
            },
        )?;
        let over = state.over;
        slot.sessions.insert(
            index,
            LiveSession {
                state,
                last_output: output.clone(),
                ended: false,
            },
        );
        if over {
            self.end_session(&mut slot, index)?;
        }
        Ok(SessionStart {
            session_id: id,
            session_index: index,
            resumed: false,
            output,
        })
    }

    /// Runs one user turn. Both the turn and the agent's output are in the
    /// log before this returns.
    pub fn post_turn(&self, session: &str, text: &str) -> Result<AgentOutput, ServiceError> {
        let (slot, index) = self.session_slot(session)?;
        let mut slot = lock(&slot);
        let live = slot
            .sessions
            .get(&index)
            .ok_or_else(|| ServiceError::UnknownSession(session.to_string()))?;
        if live.ended || live.state.over {
            return Err(ServiceError::SessionOver(session.to_string()));
        }
        let mut state = live.state.clone();
        let output = self.engine.handle_turn(&mut state, text)?;
        self.append(
            &mut slot,
            EventKind::UserTurn {
                session_id: session.to_string(),
                text: text.to_string(),
            },
        )?;
        self.append(
            &mut slot,
            EventKind::AgentOutput {
                session_id: session.to_string(),
                output: output.clone(),
            },
        )?;
        let over = state.over;
        let live = slot.sessions.get_mut(&index).expect("checked above");
        live.state = state;
        live.last_output = output.clone();
        if over {
            self.end_session(&mut slot, index)?;
        }
        Ok(output)
    }

    pub fn progress(&self, user_id: &str) -> Result<Progress, ServiceError> {
        let slot = self.slot(user_id)?;
        let slot = lock(&slot);
        let record = &slot.record;
        let next_session = (record.sessions_completed < SESSIONS).then(|| {
            let index = record.sessions_completed + 1;
            let topics = record
                .curriculum
                .session(index)
                .unwrap_or_default()
                .iter()
                .map(|id| {
                    let topic = self.engine.content().topic(id);
                    TopicInfo {
                        id: id.clone(),
                        title: topic.map_or_else(|| id.clone(), |t| t.title.clone()),
                        tier: topic.map_or(Tier::Easy, |t| t.tier),
                    }
                })
                .collect();
            NextSession { index, topics }
        });
        Ok(Progress {
            user_id: record.user_id.clone(),
            name: record.name.clone(),
            sessions_completed: record.sessions_completed,
            total_sessions: SESSIONS,
            next_session,
        })
    }

    /// The session as a transcript: user turns, agent utterances, and
    /// feedback and summary texts.
    pub fn transcript(&self, session: &str) -> Result<Transcript, ServiceError> {
        let (slot, _) = self.session_slot(session)?;
        let slot = lock(&slot);
        let mut transcript = Transcript::new(session, Condition::Auto);
        let mut found = false;
        for event in slot.events.iter().filter(|e| e.kind.session_id() == session) {
            found = true;
            let turns: Vec<(Speaker, &str)> = match &event.kind {
                EventKind::UserTurn { text, .. } => vec![(Speaker::User, text)],
                EventKind::AgentOutput { output, .. } => output
                    .items
                    .iter()
                    .filter_map(|item| match item.kind {
                        OutputKind::Utterance => Some((Speaker::Agent, item.text.as_str())),
                        OutputKind::Feedback | OutputKind::Summary => Some((Speaker::Feedback, item.text.as_str())),
                        OutputKind::SessionOver => None,
                    })
                    .collect(),
                _ => Vec::new(),
            };
            for (speaker, text) in turns {
                // event times are appended in order, so this cannot fail
                let _ = transcript.push(speaker, text, event.at);
            }
        }
        if !found {
            return Err(ServiceError::UnknownSession(session.to_string()));
        }
        Ok(transcript)
    }

    pub fn last_output(&self, session: &str) -> Result<AgentOutput, ServiceError> {
        self.with_session(session, |live| live.last_output.clone())
    }

    pub fn session_state(&self, session: &str) -> Result<SessionState, ServiceError> {
        self.with_session(session, |live| live.state.clone())
    }

    /// Every event recorded for a user, oldest first.
    pub fn events(&self, user_id: &str) -> Result<Vec<Event>, ServiceError> {
        let slot = self.slot(user_id)?;
        let events = lock(&slot).events.clone();
        Ok(events)
    }

    fn with_session<T>(&self, session: &str, f: impl FnOnce(&LiveSession) -> T) -> Result<T, ServiceError> {
        let (slot, index) = self.session_slot(session)?;
        let slot = lock(&slot);
        slot.sessions
            .get(&index)
            .map(f)
            .ok_or_else(|| ServiceError::UnknownSession(session.to_string()))
    }

    fn slot(&self, user_id: &str) -> Result<Arc<Mutex<UserSlot>>, ServiceError> {
        self.users
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(user_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownUser(user_id.to_string()))
    }

    fn session_slot(&self, session: &str) -> Result<(Arc<Mutex<UserSlot>>, usize), ServiceError> {
        let unknown = || ServiceError::UnknownSession(session.to_string());
        let (user_id, index) = parse_session_id(session).ok_or_else(unknown)?;
        let slot = self.slot(user_id).map_err(|_| unknown())?;
        Ok((slot, index))
    }

    fn append(&self, slot: &mut UserSlot, kind: EventKind) -> Result<(), ServiceError> {
        let event = Event {
            at: self.clock.now(),
            kind,
        };
        self.store.append(&slot.record.user_id, &event)?;
        slot.events.push(event);
        Ok(())
    }

    fn end_session(&self, slot: &mut UserSlot, index: usize) -> Result<(), ServiceError> {
        let id = session_id(&slot.record.user_id, index);
        self.append(slot, EventKind::SessionEnded { session_id: id })?;
        self.mark_ended(slot, index);
        self.store.write_user(&slot.record)
    }

    fn mark_ended(&self, slot: &mut UserSlot, index: usize) {
        let live = slot.sessions.get_mut(&index).expect("ended session exists");
        live.ended = true;
        slot.memory = live.state.memory();
        slot.record.sessions_completed = slot.record.sessions_completed.max(index).min(SESSIONS);
        slot.record.next_session_index = (slot.record.sessions_completed + 1).min(SESSIONS);
    }

    /// Rebuilds a user's sessions from the log, checking every recorded
    /// output against a fresh run. A turn whose output never made it to the
    /// log is recomputed and appended.
    fn replay_user(&self, user_id: &str) -> Result<UserSlot, ServiceError> {
        let record = self.store.read_user(user_id)?;
        let events = self.store.read_events(user_id)?;
        let mut slot = UserSlot {
            record,
            events: Vec::new(),
            sessions: BTreeMap::new(),
            memory: Vec::new(),
        };
        slot.record.sessions_completed = 0;
        slot.record.next_session_index = 1;
        // output computed from the log that the next event should confirm
        let mut pending: Option<(String, usize, AgentOutput)> = None;

        for event in events {
            let session = event.kind.session_id().to_string();
            let diverged = |detail: String| ServiceError::ReplayDivergence {
                session: session.clone(),
                detail,
            };
            if let Some((pending_session, _, _)) = &pending {
                if !matches!(event.kind, EventKind::AgentOutput { .. }) {
                    return Err(diverged(format!("missing agent output for {pending_session}")));
                }
            }
            match &event.kind {
                EventKind::SessionStarted {
                    session_index,
                    seed,
                    prior_memory,
                    ..
                } => {
                    let (state, output) = self.engine.start_session_with_memory(
                        user_id,
                        &slot.record.curriculum,
                        *session_index,
                        *seed,
                        prior_memory.clone(),
                    )?;
                    slot.sessions.insert(
                        *session_index,
                        LiveSession {
                            state,
                            last_output: AgentOutput::default(),
                            ended: false,
                        },
                    );
                    pending = Some((session.clone(), *session_index, output));
                }
                EventKind::UserTurn { text, .. } => {
                    let index = live_index(&session).ok_or_else(|| diverged("bad session id".into()))?;
                    let live = slot
                        .sessions
                        .get_mut(&index)
                        .ok_or_else(|| diverged("turn before session start".into()))?;
                    let output = self.engine.handle_turn(&mut live.state, text)?;
                    pending = Some((session.clone(), index, output));
                }
                EventKind::AgentOutput { output, .. } => {
                    let Some((expected_session, index, expected)) = pending.take() else {
                        return Err(diverged("agent output without a cause".into()));
                    };
                    if expected_session != session || &expected != output {
                        return Err(diverged("recorded output differs from replayed output".into()));
                    }
                    slot.sessions
                        .get_mut(&index)
                        .expect("pending session exists")
                        .last_output = expected;
                }
                EventKind::SessionEnded { .. } => {
                    let index = live_index(&session).ok_or_else(|| diverged("bad session id".into()))?;
                    if !slot.sessions.get(&index).is_some_and(|s| s.state.over) {
                        return Err(diverged("session ended before its plan did".into()));
                    }
                    self.mark_ended(&mut slot, index);
                }
            }
            slot.events.push(event);
        }

        if let Some((session, index, output)) = pending {
            self.append(
                &mut slot,
                EventKind::AgentOutput {
                    session_id: session,
                    output: output.clone(),
                },
            )?;
            slot.sessions
                .get_mut(&index)
                .expect("pending session exists")
                .last_output = output;
        }
        let unfinished: Vec<usize> = slot
            .sessions
            .iter()
            .filter(|(_, s)| s.state.over && !s.ended)
            .map(|(&i, _)| i)
            .collect();
        for index in unfinished {
            self.end_session(&mut slot, index)?;
        }
        self.store.write_user(&slot.record)?;
        Ok(slot)
    }
}

fn live_index(session: &str) -> Option<usize> {
    parse_session_id(session).map(|(_, i)| i)
}

fn lock(slot: &Mutex<UserSlot>) -> MutexGuard<'_, UserSlot> {
    slot.lock().unwrap_or_else(|e| e.into_inner())
}
