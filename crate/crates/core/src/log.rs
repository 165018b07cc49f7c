//! Line-delimited JSON event logs.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::event::Event;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("event log {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("event log line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl LogError {
    fn io(path: &Path, source: io::Error) -> Self {
        LogError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Reads every event in a log file. Blank lines are skipped; line numbers are 1-based.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<Event>, LogError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| LogError::io(path, e))?;
    read_log_from(BufReader::new(file)).map_err(|e| match e {
        LogError::Io { source, .. } => LogError::io(path, source),
        other => other,
    })
}

pub fn read_log_from(reader: impl BufRead) -> Result<Vec<Event>, LogError> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| LogError::io(Path::new("<reader>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|e| LogError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        events.push(event);
    }
    Ok(events)
}

/// Writes `events` to a fresh file, replacing any existing content.
pub fn write_log(path: impl AsRef<Path>, events: &[Event]) -> Result<(), LogError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| LogError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for event in events {
        write_line(&mut out, event).map_err(|e| LogError::io(path, e))?;
    }
    out.flush().map_err(|e| LogError::io(path, e))
}

fn write_line(out: &mut impl Write, event: &Event) -> io::Result<()> {
    serde_json::to_writer(&mut *out, event)?;
    out.write_all(b"\n")
}

/// Append-only writer. Each call to [`append`](Self::append) writes one line
/// and flushes it to the OS before returning.
#[derive(Debug)]
pub struct EventLogWriter {
    path: PathBuf,
    file: File,
    sync: bool,
}

impl EventLogWriter {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| LogError::io(&path, e))?;
        Ok(Self {
            path,
            file,
            sync: false,
        })
    }

    /// Also `fsync` after every append.
    pub fn with_sync(mut self, sync: bool) -> Self {
        self.sync = sync;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &Event) -> Result<(), LogError> {
        let mut line = serde_json::to_vec(event).map_err(|e| LogError::io(&self.path, e.into()))?;
        line.push(b'\n');
        self.file
            .write_all(&line)
            .map_err(|e| LogError::io(&self.path, e))?;
        if self.sync {
            self.file.sync_data().map_err(|e| LogError::io(&self.path, e))?;
        }
        Ok(())
    }
}
