//! Filesystem persistence.
//!
//! Layout under the data directory:
//!
//! ```text
//! blobs/ab/cdef...       artifact bytes, named by their sha-256
//! sessions/<id>/session.json   latest snapshot (the commit point)
//! sessions/<id>/events.jsonl   append-only log: header line, then events
//! tmp/                   staging area for atomic writes
//! ```
//!
//! Every file is written to `tmp/`, synced, then renamed into place. A
//! session operation is acknowledged only after its snapshot is renamed, and
//! the snapshot only references blobs that were already renamed, so a crash
//! never exposes a partial artifact. The event log is brought up to date with
//! the snapshot whenever a session is loaded.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use clay_core::blob::sha256_hex;
use clay_core::events::{InteractionEvent, SessionHeader};
use clay_core::{BlobStore, ContentRef, Session, SessionId};
use serde::{Deserialize, Serialize};

use crate::error::StoreError;

type Result<T, E = StoreError> = std::result::Result<T, E>;

/// On-disk snapshot record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredSession {
    pub saved_at: DateTime<Utc>,
    pub header: SessionHeader,
    pub session: Session,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub blobs_checked: usize,
    pub sessions_checked: usize,
    /// Blob files whose bytes do not hash to their name.
    pub corrupt_blobs: Vec<String>,
    /// (session, ref) pairs pointing at blobs that are not stored.
    pub dangling_refs: Vec<(String, String)>,
    pub unreadable_sessions: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.corrupt_blobs.is_empty() && self.dangling_refs.is_empty() && self.unreadable_sessions.is_empty()
    }
}

pub struct FsStore {
    root: PathBuf,
    tmp_counter: AtomicU64,
    /// Events known to be in each session's log file.
    logged: Mutex<HashMap<SessionId, usize>>,
}

fn valid_session_id(id: &SessionId) -> bool {
    !id.0.is_empty()
        && id.0.len() <= 128
        && id.0.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn sync_dir(dir: &Path) {
    // Directory fsync is best effort; some filesystems refuse it.
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

impl FsStore {
    /// Opens (creating if needed) a store and clears leftovers from
    /// interrupted writes.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in ["blobs", "sessions", "tmp"] {
            let p = root.join(sub);
            fs::create_dir_all(&p).map_err(|e| StoreError::io(&p, e))?;
        }
        let tmp = root.join("tmp");
        for entry in fs::read_dir(&tmp).map_err(|e| StoreError::io(&tmp, e))?.flatten() {
            let _ = fs::remove_file(entry.path());
        }
        Ok(FsStore { root, tmp_counter: AtomicU64::new(0), logged: Mutex::new(HashMap::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn blob_path(&self, key: &ContentRef) -> PathBuf {
        let k = key.as_str();
        self.root.join("blobs").join(&k[..2]).join(&k[2..])
    }

    fn session_dir(&self, id: &SessionId) -> Result<PathBuf> {
        if !valid_session_id(id) {
            return Err(StoreError::NotFound(format!("session {:?}", id.0)));
        }
        Ok(self.root.join("sessions").join(&id.0))
    }

    /// Writes `bytes` to `target` through the staging directory.
    fn write_atomic(&self, target: &Path, bytes: &[u8]) -> Result<()> {
        let n = self.tmp_counter.fetch_add(1, Ordering::SeqCst);
        let tmp = self.root.join("tmp").join(format!("{}-{n}.tmp", std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::rename(&tmp, target)?;
            if let Some(parent) = target.parent() {
                sync_dir(parent);
            }
            Ok(())
        };
        write().map_err(|e| {
            let _ = fs::remove_file(&tmp);
            StoreError::io(target, e)
        })
    }

    // ---- sessions -------------------------------------------------------

    pub fn session_exists(&self, id: &SessionId) -> bool {
        self.session_dir(id).map(|d| d.join("session.json").exists()).unwrap_or(false)
    }

    /// Commits a session snapshot, then appends its new events to the log.
    pub fn save_session(&self, header: &SessionHeader, session: &Session) -> Result<()> {
        let dir = self.session_dir(&session.id)?;
        let record = StoredSession { saved_at: Utc::now(), header: header.clone(), session: session.clone() };
        let json = serde_json::to_vec(&record).expect("session serializes");
        self.write_atomic(&dir.join("session.json"), &json)?;
        self.append_log(&dir, header, &session.id, &session.events)
    }

    fn append_log(&self, dir: &Path, header: &SessionHeader, id: &SessionId, events: &[InteractionEvent]) -> Result<()> {
        let path = dir.join("events.jsonl");
        let mut logged = self.logged.lock().expect("log index");
        let known = match logged.get(id) {
            Some(&n) if path.exists() => n,
            _ => reconcile_log(&path, header)?,
        };
        if known < events.len() {
            let mut f = OpenOptions::new().append(true).open(&path).map_err(|e| StoreError::io(&path, e))?;
            let mut buf = Vec::new();
            for e in &events[known..] {
                serde_json::to_writer(&mut buf, e).expect("event serializes");
                buf.push(b'\n');
            }
            f.write_all(&buf).and_then(|_| f.sync_data()).map_err(|e| StoreError::io(&path, e))?;
        }
        logged.insert(id.clone(), events.len());
        Ok(())
    }

    pub fn load_session(&self, id: &SessionId) -> Result<StoredSession> {
        let dir = self.session_dir(id)?;
        let path = dir.join("session.json");
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(format!("session {}", id.0)))
            }
            Err(e) => return Err(StoreError::io(&path, e)),
        };
        let record: StoredSession = serde_json::from_slice(&bytes)
            .map_err(|e| StoreError::Corrupt { path: path.display().to_string(), message: e.to_string() })?;
        // The log may trail the snapshot after a crash; catch it up.
        self.logged.lock().expect("log index").remove(id);
        self.append_log(&dir, &record.header, id, &record.session.events)?;
        Ok(record)
    }

    pub fn list_sessions(&self) -> Result<Vec<SessionId>> {
        let dir = self.root.join("sessions");
        let mut ids: Vec<SessionId> = fs::read_dir(&dir)
            .map_err(|e| StoreError::io(&dir, e))?
            .flatten()
            .filter(|e| e.path().join("session.json").exists())
            .filter_map(|e| e.file_name().into_string().ok())
            .map(SessionId)
            .collect();
        ids.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(ids)
    }

    pub fn log_path(&self, id: &SessionId) -> Result<PathBuf> {
        Ok(self.session_dir(id)?.join("events.jsonl"))
    }

    /// Re-hashes every blob and checks that sessions only reference stored blobs.
    pub fn audit(&self) -> Result<AuditReport> {
        let mut report = AuditReport::default();
        let blobs = self.root.join("blobs");
        for shard in fs::read_dir(&blobs).map_err(|e| StoreError::io(&blobs, e))?.flatten() {
            let prefix = shard.file_name().to_string_lossy().to_string();
            for f in fs::read_dir(shard.path()).map_err(|e| StoreError::io(&shard.path(), e))?.flatten() {
                let name = format!("{prefix}{}", f.file_name().to_string_lossy());
                let bytes = fs::read(f.path()).map_err(|e| StoreError::io(&f.path(), e))?;
                report.blobs_checked += 1;
                if sha256_hex(&bytes) != name {
                    report.corrupt_blobs.push(name);
                }
            }
        }
        for id in self.list_sessions()? {
            match self.load_session(&id) {
                Ok(rec) => {
                    report.sessions_checked += 1;
                    for a in &rec.session.artifacts {
                        for r in &a.image_refs {
                            if !self.blob_path(r).exists() {
                                report.dangling_refs.push((id.0.clone(), r.to_string()));
                            }
                        }
                    }
                }
                Err(_) => report.unreadable_sessions.push(id.0.clone()),
            }
        }
        Ok(report)
    }
}

/// Keeps the longest prefix of complete, parseable lines and returns how
/// many events it holds. A missing or headerless file is rewritten with
/// just the header.
fn reconcile_log(path: &Path, header: &SessionHeader) -> Result<usize> {
    let mut keep_bytes = 0u64;
    let mut events = 0usize;
    let mut has_header = false;
    if let Ok(f) = File::open(path) {
        let mut reader = BufReader::new(f);
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(|e| StoreError::io(path, e))?;
            if n == 0 || !line.ends_with('\n') {
                break;
            }
            let ok = if has_header {
                serde_json::from_str::<InteractionEvent>(&line).is_ok()
            } else {
                serde_json::from_str::<SessionHeader>(&line).is_ok()
            };
            if !ok {
                break;
            }
            if has_header {
                events += 1;
            }
            has_header = true;
            keep_bytes += n as u64;
        }
    }
    if !has_header {
        let mut f = File::create(path).map_err(|e| StoreError::io(path, e))?;
        let mut line = serde_json::to_vec(header).expect("header serializes");
        line.push(b'\n');
        f.write_all(&line).and_then(|_| f.sync_all()).map_err(|e| StoreError::io(path, e))?;
        return Ok(0);
    }
    let f = OpenOptions::new().write(true).open(path).map_err(|e| StoreError::io(path, e))?;
    f.set_len(keep_bytes).and_then(|_| f.sync_all()).map_err(|e| StoreError::io(path, e))?;
    Ok(events)
}

impl BlobStore for FsStore {
    fn put(&self, bytes: &[u8]) -> std::io::Result<ContentRef> {
        let key = ContentRef::of(bytes);
        let path = self.blob_path(&key);
        if !path.exists() {
            self.write_atomic(&path, bytes).map_err(|e| match e {
                StoreError::Io { source, .. } => source,
                other => std::io::Error::other(other.to_string()),
            })?;
        }
        Ok(key)
    }

    fn get(&self, key: &ContentRef) -> std::io::Result<Option<Vec<u8>>> {
        match fs::read(self.blob_path(key)) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}
