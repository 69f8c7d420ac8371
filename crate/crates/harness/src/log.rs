//! Session log: one JSON object per line.
//!
//! Line 1 is the header (format tag, version, seed, config hash and the full
//! config). Body records follow in `(tick, kind)` order, where `tick` is the
//! engine tick that produced them and the kind order is
//! input < frame < event < haptic. The last line is an `end` record carrying
//! the body record count; a log without it is treated as truncated.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::Path;

use holdfeel_core::game::{GameEvent, PairInput};
use holdfeel_core::ActuatorPair;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SessionConfig;

pub const LOG_FORMAT: &str = "holdfeel-session-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub config: SessionConfig,
}

impl LogHeader {
    pub fn for_config(config: &SessionConfig) -> Self {
        Self {
            format: LOG_FORMAT.to_string(),
            version: LOG_VERSION,
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
        }
    }
}

/// Direction of a radio frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// device → host telemetry
    Up,
    /// host → device command
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header(LogHeader),
    /// What the game consumed this tick.
    Input { tick: u64, input: PairInput },
    /// A frame handed to the radio, hex encoded.
    Frame { tick: u64, link: Link, device_id: u8, hex: String },
    Event { tick: u64, event: GameEvent },
    /// Pulse rendered for a fox step onto `column`.
    Haptic { tick: u64, column: usize, pair: ActuatorPair },
    End { tick: u64, records: u64 },
}

impl Record {
    pub fn tick(&self) -> u64 {
        match *self {
            Record::Header(_) => 0,
            Record::Input { tick, .. }
            | Record::Frame { tick, .. }
            | Record::Event { tick, .. }
            | Record::Haptic { tick, .. }
            | Record::End { tick, .. } => tick,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Record::Header(_) => 0,
            Record::Input { .. } => 1,
            Record::Frame { .. } => 2,
            Record::Event { .. } => 3,
            Record::Haptic { .. } => 4,
            Record::End { .. } => 5,
        }
    }

    pub fn order_key(&self) -> (u64, u8) {
        (self.tick(), self.rank())
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log is empty")]
    Empty,
    #[error("line 1 is not a session log header: {0}")]
    BadHeader(String),
    #[error("unsupported log format {format:?} version {version} (expected {LOG_FORMAT:?} version {LOG_VERSION})")]
    UnsupportedVersion { format: String, version: u32 },
    #[error("config hash mismatch: header says {recorded}, config hashes to {computed}")]
    ConfigHashMismatch { recorded: String, computed: String },
    #[error("header seed {header} differs from config seed {config}")]
    SeedMismatch { header: u64, config: u64 },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: record out of (tick, kind) order")]
    OutOfOrder { line: usize },
    #[error("line {line}: records after the end terminator")]
    TrailingRecords { line: usize },
    #[error("missing end terminator after {records} records (log truncated?)")]
    MissingTerminator { records: u64 },
    #[error("end terminator counts {declared} records but the log holds {found}")]
    CountMismatch { declared: u64, found: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    /// Body records, without header and terminator.
    pub records: Vec<Record>,
    /// Tick recorded on the terminator.
    pub end_tick: u64,
}

impl SessionLog {
    pub fn config(&self) -> &SessionConfig {
        &self.header.config
    }

    pub fn events(&self) -> impl Iterator<Item = (u64, &GameEvent)> + '_ {
        self.records.iter().filter_map(|r| match r {
            Record::Event { tick, event } => Some((*tick, event)),
            _ => None,
        })
    }

    pub fn inputs(&self) -> impl Iterator<Item = (u64, &PairInput)> + '_ {
        self.records.iter().filter_map(|r| match r {
            Record::Input { tick, input } => Some((*tick, input)),
            _ => None,
        })
    }

    pub fn haptics(&self) -> impl Iterator<Item = (u64, usize, &ActuatorPair)> + '_ {
        self.records.iter().filter_map(|r| match r {
            Record::Haptic { tick, column, pair } => Some((*tick, *column, pair)),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, r: &Record| {
            let text = serde_json::to_string(r).expect("log records always serialize");
            writeln!(out, "{text}").expect("writing to a String");
        };
        line(&mut out, &Record::Header(self.header.clone()));
        for r in &self.records {
            line(&mut out, r);
        }
        line(&mut out, &Record::End { tick: self.end_tick, records: self.records.len() as u64 });
        out
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_jsonl().as_bytes())?;
        f.flush()
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        Self::from_lines(text.lines().map(|l| Ok(l.to_string())))
    }

    pub fn read_from(path: &Path) -> Result<Self, LogError> {
        let f = io::BufReader::new(std::fs::File::open(path)?);
        Self::from_lines(f.lines())
    }

    fn from_lines(lines: impl Iterator<Item = io::Result<String>>) -> Result<Self, LogError> {
        let mut lines = lines.enumerate().map(|(i, l)| (i + 1, l));
        let (_, first) = lines.next().ok_or(LogError::Empty)?;
        let first = first?;
        // format and version are checked before the rest of the header is interpreted
        let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| LogError::BadHeader(e.to_string()))?;
        if raw.get("record").and_then(|v| v.as_str()) != Some("header") {
            return Err(LogError::BadHeader("first record is not a header".into()));
        }
        let format = raw.get("format").and_then(|v| v.as_str()).unwrap_or_default().to_string();
        let version = raw.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if format != LOG_FORMAT || version != LOG_VERSION {
            return Err(LogError::UnsupportedVersion { format, version });
        }
        let header = match serde_json::from_value::<Record>(raw) {
            Ok(Record::Header(h)) => h,
            Ok(_) => unreachable!("tag checked above"),
            Err(e) => return Err(LogError::BadHeader(e.to_string())),
        };
        let computed = header.config.hash();
        if computed != header.config_hash {
            return Err(LogError::ConfigHashMismatch { recorded: header.config_hash, computed });
        }
        if header.seed != header.config.seed {
            return Err(LogError::SeedMismatch { header: header.seed, config: header.config.seed });
        }

        let mut records = Vec::new();
        let mut end = None;
        let mut last_key = (0, 0);
        for (line, text) in lines {
            let text = text?;
            if text.trim().is_empty() {
                continue;
            }
            if end.is_some() {
                return Err(LogError::TrailingRecords { line });
            }
            let record: Record =
                serde_json::from_str(&text).map_err(|e| LogError::Malformed { line, message: e.to_string() })?;
            if matches!(record, Record::Header(_)) {
                return Err(LogError::Malformed { line, message: "second header".into() });
            }
            if record.order_key() < last_key {
                return Err(LogError::OutOfOrder { line });
            }
            last_key = record.order_key();
            match record {
                Record::End { tick, records: declared } => end = Some((tick, declared)),
                r => records.push(r),
            }
        }
        let found = records.len() as u64;
        let (end_tick, declared) = end.ok_or(LogError::MissingTerminator { records: found })?;
        if declared != found {
            return Err(LogError::CountMismatch { declared, found });
        }
        Ok(Self { header, records, end_tick })
    }
}
