//! Append-only JSONL store for finished session records.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use hintbandit::SessionRecord;

/// Appends one record per line. Writes are serialized so concurrent
/// finishes never interleave within a line.
#[derive(Debug)]
pub struct CorpusWriter {
    path: PathBuf,
    lock: Mutex<()>,
}

impl CorpusWriter {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            lock: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the record and flushes it to disk before returning.
    pub fn append(&self, record: &SessionRecord) -> std::io::Result<()> {
        let mut line = record.to_json_line();
        line.push('\n');
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        file.write_all(line.as_bytes())?;
        file.sync_data()
    }
}
