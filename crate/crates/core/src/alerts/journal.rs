//! Append-only NDJSON journal of lifecycle records.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use super::JournalRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub seq: u64,
    #[serde(flatten)]
    pub record: JournalRecord,
}

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("journal {path} line {line} is corrupt: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("journal {path} line {line}: sequence {seq} does not follow {prev}")]
    Sequence { path: PathBuf, line: usize, seq: u64, prev: u64 },
}

#[derive(Debug)]
pub struct Journal {
    file: Option<(PathBuf, File)>,
    last_seq: u64,
    fsync: bool,
}

impl Journal {
    /// A journal that only numbers entries and persists nothing.
    pub fn in_memory() -> Self {
        Self {
            file: None,
            last_seq: 0,
            fsync: false,
        }
    }

    /// Opens or creates the journal and returns the entries already in it.
    /// A torn final line (a crash mid-append) is cut off; corruption
    /// anywhere else is an error.
    pub fn open(path: &Path, fsync: bool) -> Result<(Self, Vec<JournalEntry>), JournalError> {
        let io = |source| JournalError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;

        let mut entries = Vec::new();
        let mut good_len = 0usize;
        let mut last_seq = 0;
        let mut offset = 0usize;
        let mut line_no = 0;
        while offset < bytes.len() {
            line_no += 1;
            let (line, complete) = match bytes[offset..].iter().position(|&b| b == b'\n') {
                Some(i) => (&bytes[offset..offset + i], true),
                None => (&bytes[offset..], false),
            };
            let next = offset + line.len() + usize::from(complete);
            if line.iter().all(|b| b.is_ascii_whitespace()) {
                offset = next;
                good_len = next;
                continue;
            }
            match serde_json::from_slice::<JournalEntry>(line) {
                Ok(entry) if complete => {
                    if entry.seq != last_seq + 1 {
                        return Err(JournalError::Sequence {
                            path: path.to_path_buf(),
                            line: line_no,
                            seq: entry.seq,
                            prev: last_seq,
                        });
                    }
                    last_seq = entry.seq;
                    entries.push(entry);
                    good_len = next;
                }
                _ if !complete => {
                    warn!(path = %path.display(), "discarding torn final journal line");
                    break;
                }
                Err(e) => {
                    return Err(JournalError::Corrupt {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: e.to_string(),
                    })
                }
                Ok(_) => unreachable!(),
            }
            offset = next;
        }
        if good_len < bytes.len() {
            file.set_len(good_len as u64).map_err(io)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
        }
        Ok((
            Self {
                file: Some((path.to_path_buf(), file)),
                last_seq,
                fsync,
            },
            entries,
        ))
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    /// Writes the record as one line; the entry is durable once this returns
    /// (with fsync enabled).
    pub fn append(&mut self, record: JournalRecord) -> Result<JournalEntry, JournalError> {
        let entry = JournalEntry {
            seq: self.last_seq + 1,
            record,
        };
        if let Some((path, file)) = &mut self.file {
            let mut line = serde_json::to_vec(&entry).expect("journal entries serialize");
            line.push(b'\n');
            let io = |source| JournalError::Io {
                path: path.clone(),
                source,
            };
            file.write_all(&line).map_err(io)?;
            if self.fsync {
                file.sync_data().map_err(io)?;
            }
        }
        self.last_seq = entry.seq;
        Ok(entry)
    }
}
