use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::event::{EventKind, GameEnded, LogRecord, SessionStarted};
use crate::game::CandyId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("corrupt log at seq {seq}: {reason}")]
pub struct CorruptLog {
    /// First sequence number that failed a check.
    pub seq: u64,
    pub reason: String,
}

impl CorruptLog {
    fn at(seq: u64, reason: impl Into<String>) -> Self {
        Self {
            seq,
            reason: reason.into(),
        }
    }
}

#[derive(Serialize)]
struct Body<'a> {
    seq: u64,
    at: u64,
    kind: &'a EventKind,
}

/// Chain checksum: the first 16 hex digits of sha256(previous chk ‖ record
/// body serialized without `chk`).
pub fn chain_checksum(prev: &str, seq: u64, at: u64, kind: &EventKind) -> String {
    let body = serde_json::to_string(&Body { seq, at, kind }).expect("event serializes");
    let mut hasher = Sha256::new();
    hasher.update(prev.as_bytes());
    hasher.update(body.as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn log_file_name(session_id: &str) -> String {
    format!("session-{session_id}.jsonl")
}

/// Append-only writer side of a session log. Lines are kept in memory and
/// optionally streamed to a sink as they are appended.
#[derive(Default)]
pub struct EventLog {
    records: Vec<LogRecord>,
    lines: Vec<String>,
    sink: Option<Box<dyn Write + Send>>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_sink(sink: Box<dyn Write + Send>) -> Self {
        Self {
            sink: Some(sink),
            ..Self::default()
        }
    }

    pub fn next_seq(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn append(&mut self, at: u64, kind: EventKind) -> io::Result<&LogRecord> {
        let seq = self.next_seq();
        let prev = self.records.last().map_or("", |r| r.chk.as_str());
        let chk = chain_checksum(prev, seq, at, &kind);
        let record = LogRecord { seq, at, kind, chk };
        let line = serde_json::to_string(&record).expect("record serializes");
        if let Some(sink) = self.sink.as_mut() {
            sink.write_all(line.as_bytes())?;
            sink.write_all(b"\n")?;
        }
        self.lines.push(line);
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn flush(&mut self) -> io::Result<()> {
        match self.sink.as_mut() {
            Some(sink) => sink.flush(),
            None => Ok(()),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// A parsed log that passed the integrity checks: starts with
/// `SessionStarted`, gapless `seq` from 0, non-decreasing `at`, intact
/// checksum chain, and every line in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub records: Vec<LogRecord>,
}

impl SessionLog {
    pub fn parse(text: &str) -> Result<Self, CorruptLog> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(CorruptLog::at(0, "empty log, missing SessionStarted"));
        }
        let mut records: Vec<LogRecord> = Vec::new();
        for (i, line) in body.split('\n').enumerate() {
            let expected = i as u64;
            let record: LogRecord =
                serde_json::from_str(line).map_err(|e| CorruptLog::at(expected, format!("unparseable line: {e}")))?;
            if record.seq != expected {
                return Err(CorruptLog::at(
                    expected,
                    format!("expected seq {expected}, found {}", record.seq),
                ));
            }
            if serde_json::to_string(&record).expect("record serializes") != line {
                return Err(CorruptLog::at(expected, "line is not in canonical form"));
            }
            let prev = records.last();
            if prev.is_some_and(|p| p.at > record.at) {
                return Err(CorruptLog::at(expected, "timestamp went backwards"));
            }
            let chk = chain_checksum(prev.map_or("", |p| p.chk.as_str()), record.seq, record.at, &record.kind);
            if chk != record.chk {
                return Err(CorruptLog::at(expected, "checksum mismatch"));
            }
            let is_start = matches!(record.kind, EventKind::SessionStarted(_));
            if (i == 0) != is_start {
                let reason = if i == 0 {
                    "log does not begin with SessionStarted"
                } else {
                    "SessionStarted after the first record"
                };
                return Err(CorruptLog::at(expected, reason));
            }
            if prev.is_some_and(|p| matches!(p.kind, EventKind::GameEnded(_))) {
                return Err(CorruptLog::at(expected, "record after GameEnded"));
            }
            records.push(record);
        }
        Ok(Self { records })
    }

    pub fn read(path: &Path) -> io::Result<Result<Self, CorruptLog>> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn started(&self) -> &SessionStarted {
        match &self.records[0].kind {
            EventKind::SessionStarted(s) => s,
            _ => unreachable!("checked by parse"),
        }
    }

    pub fn ended(&self) -> Option<&GameEnded> {
        match &self.records.last()?.kind {
            EventKind::GameEnded(e) => Some(e),
            _ => None,
        }
    }

    pub fn kinds(&self) -> impl Iterator<Item = &EventKind> {
        self.records.iter().map(|r| &r.kind)
    }

    /// The story as recorded: texts of eaten candies and non-empty human
    /// contributions in order, then the ending if there is one.
    pub fn story_parts(&self) -> Vec<String> {
        let mut texts: HashMap<CandyId, &str> = HashMap::new();
        let mut parts = Vec::new();
        for kind in self.kinds() {
            match kind {
                EventKind::SegmentsGenerated { candies, .. } => {
                    for c in candies {
                        if let Some(t) = &c.text {
                            texts.insert(c.id, t);
                        }
                    }
                }
                EventKind::CandyEaten { candy } => {
                    if let Some(t) = texts.get(candy) {
                        parts.push(t.to_string());
                    }
                }
                EventKind::HumanTextSubmitted { text } if !text.is_empty() => parts.push(text.clone()),
                EventKind::GameEnded(end) if !end.ending_text.is_empty() => parts.push(end.ending_text.clone()),
                _ => {}
            }
        }
        parts
    }

    pub fn story_text(&self) -> String {
        self.story_parts().join(" ")
    }
}
