//! Append-only NDJSON logs under one directory, plus a periodic snapshot.
//!
//! `sessions.ndjson` holds [`SessionStarted`] lines, `records.ndjson` holds
//! bare [`PerceptionRecord`]s and `receipts.ndjson` the matching
//! [`Receipt`]s. State is rebuilt by replaying sessions, then records.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{study_apply_record, study_apply_session, PerceptionRecord, Receipt, SessionStarted, StudyState};
use crate::error::{Error, Result};

/// Records between snapshots.
pub const SNAPSHOT_EVERY: u64 = 25;

const SESSIONS: &str = "sessions.ndjson";
const RECORDS: &str = "records.ndjson";
const RECEIPTS: &str = "receipts.ndjson";
const SNAPSHOT: &str = "snapshot.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub session_lines: usize,
    pub record_lines: usize,
    pub state: StudyState,
}

#[derive(Debug)]
pub struct LogFiles {
    dir: PathBuf,
    sessions: File,
    records: File,
    receipts: File,
    session_lines: usize,
}

fn append_handle(path: &Path) -> Result<File> {
    OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))
}

/// Parsed lines of an NDJSON file. A final line without a newline is a
/// torn write and is dropped.
fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let complete = match text.rfind('\n') {
        Some(end) => &text[..=end],
        None => "",
    };
    if complete.len() < text.len() {
        log::warn!("{}: ignoring incomplete last line", path.display());
    }
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::Format(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Cuts an interrupted final line so later appends start on a fresh line.
fn truncate_torn_tail(path: &Path) -> Result<()> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(Error::io(path, e)),
    };
    if bytes.last().map_or(true, |&b| b == b'\n') {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    log::warn!("{}: dropping {} bytes of an incomplete line", path.display(), bytes.len() - keep);
    let f = OpenOptions::new().write(true).open(path).map_err(|e| Error::io(path, e))?;
    f.set_len(keep as u64).map_err(|e| Error::io(path, e))
}

impl LogFiles {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for name in [SESSIONS, RECORDS, RECEIPTS] {
            truncate_torn_tail(&dir.join(name))?;
        }
        let session_lines = read_lines::<SessionStarted>(&dir.join(SESSIONS))?.len();
        Ok(LogFiles {
            sessions: append_handle(&dir.join(SESSIONS))?,
            records: append_handle(&dir.join(RECORDS))?,
            receipts: append_handle(&dir.join(RECEIPTS))?,
            session_lines,
            dir,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn records_path(&self) -> PathBuf {
        self.dir.join(RECORDS)
    }

    fn write_line<T: Serialize>(file: &mut File, path: PathBuf, value: &T) -> Result<()> {
        let mut line = serde_json::to_string(value)?;
        line.push('\n');
        file.write_all(line.as_bytes()).and_then(|_| file.sync_data()).map_err(|e| Error::io(&path, e))
    }

    pub fn append_session(&mut self, s: &SessionStarted) -> Result<()> {
        Self::write_line(&mut self.sessions, self.dir.join(SESSIONS), s)?;
        self.session_lines += 1;
        Ok(())
    }

    pub fn append_record(&mut self, r: &PerceptionRecord, receipt: &Receipt) -> Result<()> {
        Self::write_line(&mut self.records, self.dir.join(RECORDS), r)?;
        Self::write_line(&mut self.receipts, self.dir.join(RECEIPTS), receipt)
    }

    pub fn write_snapshot(&self, state: &StudyState) -> Result<()> {
        let snap = Snapshot {
            session_lines: self.session_lines,
            record_lines: state.records.len(),
            state: state.clone(),
        };
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        let path = self.dir.join(SNAPSHOT);
        std::fs::write(&tmp, serde_json::to_vec(&snap)?).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    pub fn read_snapshot(&self) -> Result<Option<Snapshot>> {
        let path = self.dir.join(SNAPSHOT);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    /// Rebuilds state from the logs, starting from the snapshot when it is
    /// consistent with them.
    pub fn replay(&self) -> Result<StudyState> {
        let sessions: Vec<SessionStarted> = read_lines(&self.dir.join(SESSIONS))?;
        let records: Vec<PerceptionRecord> = read_lines(&self.dir.join(RECORDS))?;
        let snapshot = self.read_snapshot().unwrap_or_else(|e| {
            log::warn!("discarding unreadable snapshot: {e}");
            None
        });
        let (mut state, s0, r0) = match snapshot {
            Some(snap)
                if snap.session_lines <= sessions.len()
                    && snap.record_lines <= records.len()
                    && snap.state.records[..] == records[..snap.record_lines] =>
            {
                (snap.state, snap.session_lines, snap.record_lines)
            }
            Some(_) => {
                log::warn!("snapshot disagrees with the logs; replaying from scratch");
                (StudyState::default(), 0, 0)
            }
            None => (StudyState::default(), 0, 0),
        };
        for s in &sessions[s0..] {
            study_apply_session(&mut state, s);
        }
        for r in &records[r0..] {
            study_apply_record(&mut state, r.clone());
        }
        Ok(state)
    }
}

/// Replays a log directory without opening it for writing.
pub fn replay_dir(dir: impl AsRef<Path>) -> Result<StudyState> {
    let dir = dir.as_ref();
    let sessions: Vec<SessionStarted> = read_lines(&dir.join(SESSIONS))?;
    let records: Vec<PerceptionRecord> = read_lines(&dir.join(RECORDS))?;
    let mut state = StudyState::default();
    for s in &sessions {
        study_apply_session(&mut state, s);
    }
    for r in records {
        study_apply_record(&mut state, r);
    }
    Ok(state)
}
