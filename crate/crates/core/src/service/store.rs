//! On-disk layout: one directory per user holding `user.json` and an
//! append-only `events.jsonl`.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::content::Curriculum;
use crate::dialogue::AgentOutput;
use crate::transduction::GistClause;

use super::ServiceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub name: String,
    pub sessions_completed: usize,
    /// `sessions_completed + 1`, capped at the number of sessions.
    pub next_session_index: usize,
    pub curriculum_seed: u64,
    pub curriculum: Curriculum,
    pub session_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub at: DateTime<FixedOffset>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventKind {
    SessionStarted {
        session_id: String,
        session_index: usize,
        seed: u64,
        prior_memory: Vec<GistClause>,
    },
    UserTurn {
        session_id: String,
        text: String,
    },
    AgentOutput {
        session_id: String,
        output: AgentOutput,
    },
    SessionEnded {
        session_id: String,
    },
}

impl EventKind {
    pub fn session_id(&self) -> &str {
        match self {
            EventKind::SessionStarted { session_id, .. }
            | EventKind::UserTurn { session_id, .. }
            | EventKind::AgentOutput { session_id, .. }
            | EventKind::SessionEnded { session_id } => session_id,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Store {
    root: PathBuf,
    durable: bool,
}

impl Store {
    pub fn open(root: &Path, durable: bool) -> Result<Store, ServiceError> {
        let users = root.join("users");
        fs::create_dir_all(&users).map_err(|e| io_error(&users, e))?;
        Ok(Store {
            root: root.to_path_buf(),
            durable,
        })
    }

    fn user_dir(&self, user_id: &str) -> PathBuf {
        self.root.join("users").join(user_id)
    }

    pub fn user_ids(&self) -> Result<Vec<String>, ServiceError> {
        let dir = self.root.join("users");
        let mut ids: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| io_error(&dir, e))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().join("user.json").is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Writes `user.json` through a temporary file and a rename.
    pub fn write_user(&self, record: &UserRecord) -> Result<(), ServiceError> {
        let dir = self.user_dir(&record.user_id);
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        let path = dir.join("user.json");
        let tmp = dir.join("user.json.tmp");
        let body = serde_json::to_vec_pretty(record).expect("user records serialize");
        let result = (|| {
            let mut file = File::create(&tmp)?;
            file.write_all(&body)?;
            if self.durable {
                file.sync_all()?;
            }
            fs::rename(&tmp, &path)
        })();
        result.map_err(|e| io_error(&path, e))
    }

    pub fn read_user(&self, user_id: &str) -> Result<UserRecord, ServiceError> {
        let path = self.user_dir(user_id).join("user.json");
        let body = fs::read(&path).map_err(|e| io_error(&path, e))?;
        serde_json::from_slice(&body).map_err(|e| ServiceError::Corrupt {
            path,
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn append(&self, user_id: &str, event: &Event) -> Result<(), ServiceError> {
        let path = self.user_dir(user_id).join("events.jsonl");
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        let result = (|| {
            let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
            file.write_all(line.as_bytes())?;
            file.flush()?;
            if self.durable {
                file.sync_data()?;
            }
            Ok(())
        })();
        result.map_err(|e| io_error(&path, e))
    }

    /// Reads the event log. A final line cut short by a crash is dropped and
    /// truncated away; damage anywhere else is an error.
    pub fn read_events(&self, user_id: &str) -> Result<Vec<Event>, ServiceError> {
        let path = self.user_dir(user_id).join("events.jsonl");
        let body = match fs::read_to_string(&path) {
            Ok(body) => body,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_error(&path, e)),
        };
        let mut events = Vec::new();
        let mut offset = 0;
        for (i, line) in body.split_inclusive('\n').enumerate() {
            if !line.ends_with('\n') {
                let file = OpenOptions::new()
                    .write(true)
                    .open(&path)
                    .map_err(|e| io_error(&path, e))?;
                file.set_len(offset as u64).map_err(|e| io_error(&path, e))?;
                break;
            }
            let event = serde_json::from_str(line.trim_end()).map_err(|e| ServiceError::Corrupt {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            events.push(event);
            offset += line.len();
        }
        Ok(events)
    }
}

pub(crate) fn io_error(path: &Path, source: io::Error) -> ServiceError {
    ServiceError::Io {
        path: path.to_path_buf(),
        source,
    }
}
