//! Line-delimited session recordings (`.palp.jsonl`).
//!
//! Line 1 is a header object carrying the format tag, schema version and
//! session metadata. Every following line is one frame:
//!
//! ```text
//! {"format":"palp-session","version":1,"session_id":"s1","participant_id":"p1",...}
//! {"seq":0,"t_ms":0,"f":[0,0,0,0,0,0,0,0,0,0,0,0],"rpy":[0.0,12.5,-3.0]}
//! ```
//!
//! Frames may also carry `flags` (omitted when zero) and `markers`
//! (four `[x, y, z]` positions in millimetres). The format is append-only,
//! so a recording can be written and read one frame at a time.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::telemetry::{
    FrameFlags, Markers, Orientation, SensorFrame, Session, SessionMeta, RAW_MAX, SENSOR_COUNT,
};

pub const SESSION_FORMAT_TAG: &str = "palp-session";
pub const SESSION_SCHEMA_VERSION: u32 = 1;
pub const SESSION_FILE_EXTENSION: &str = "palp.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum SessionFileError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported session schema version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u32, expected: u32 },
}

impl SessionFileError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        SessionFileError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderRecord {
    format: String,
    version: u32,
    #[serde(flatten)]
    meta: SessionMeta,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    seq: u32,
    t_ms: u32,
    f: [u16; SENSOR_COUNT],
    rpy: [f64; 3],
    #[serde(default, skip_serializing_if = "is_zero")]
    flags: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    markers: Option<Markers>,
}

fn is_zero(v: &u8) -> bool {
    *v == 0
}

impl From<&SensorFrame> for FrameRecord {
    fn from(f: &SensorFrame) -> Self {
        FrameRecord {
            seq: f.seq,
            t_ms: f.timestamp_ms,
            f: f.force_raw,
            rpy: [f.orientation.roll, f.orientation.pitch, f.orientation.yaw],
            flags: f.flags.0,
            markers: f.markers,
        }
    }
}

impl From<FrameRecord> for SensorFrame {
    fn from(r: FrameRecord) -> Self {
        SensorFrame {
            seq: r.seq,
            timestamp_ms: r.t_ms,
            force_raw: r.f,
            orientation: Orientation::new(r.rpy[0], r.rpy[1], r.rpy[2]),
            markers: r.markers,
            flags: FrameFlags(r.flags),
        }
    }
}

/// Streams a session to any writer, one line per frame.
pub struct SessionWriter<W: Write> {
    out: W,
    frames: u64,
}

impl<W: Write> SessionWriter<W> {
    pub fn new(mut out: W, meta: &SessionMeta) -> Result<Self, SessionFileError> {
        let header = HeaderRecord {
            format: SESSION_FORMAT_TAG.to_string(),
            version: SESSION_SCHEMA_VERSION,
            meta: meta.clone(),
        };
        serde_json::to_writer(&mut out, &header).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
        Ok(SessionWriter { out, frames: 0 })
    }

    pub fn write_frame(&mut self, frame: &SensorFrame) -> Result<(), SessionFileError> {
        serde_json::to_writer(&mut self.out, &FrameRecord::from(frame)).map_err(io::Error::from)?;
        self.out.write_all(b"\n")?;
        self.frames += 1;
        Ok(())
    }

    pub fn frames_written(&self) -> u64 {
        self.frames
    }

    pub fn flush(&mut self) -> Result<(), SessionFileError> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(mut self) -> Result<W, SessionFileError> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Streams a recording back without loading it whole.
pub struct SessionReader<R: BufRead> {
    lines: io::Lines<R>,
    line_no: usize,
    meta: SessionMeta,
    last_t: Option<u32>,
}

impl<R: BufRead> SessionReader<R> {
    pub fn new(input: R) -> Result<Self, SessionFileError> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .transpose()?
            .ok_or_else(|| SessionFileError::parse(1, "empty file: missing header line"))?;
        let value: serde_json::Value =
            serde_json::from_str(&first).map_err(|e| SessionFileError::parse(1, e.to_string()))?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(SESSION_FORMAT_TAG) => {}
            other => {
                return Err(SessionFileError::parse(
                    1,
                    format!("format tag {other:?}, expected {SESSION_FORMAT_TAG:?}"),
                ))
            }
        }
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| SessionFileError::parse(1, "header has no version"))?;
        if version != u64::from(SESSION_SCHEMA_VERSION) {
            return Err(SessionFileError::SchemaVersionMismatch {
                found: version.min(u64::from(u32::MAX)) as u32,
                expected: SESSION_SCHEMA_VERSION,
            });
        }
        let header: HeaderRecord =
            serde_json::from_value(value).map_err(|e| SessionFileError::parse(1, e.to_string()))?;
        Ok(SessionReader {
            lines,
            line_no: 1,
            meta: header.meta,
            last_t: None,
        })
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    fn parse_frame(&mut self, text: &str) -> Result<SensorFrame, SessionFileError> {
        let record: FrameRecord = serde_json::from_str(text)
            .map_err(|e| SessionFileError::parse(self.line_no, e.to_string()))?;
        let frame = SensorFrame::from(record);
        if let Some((sensor, value)) = frame.out_of_range_channel() {
            return Err(SessionFileError::parse(
                self.line_no,
                format!("force {sensor} = {value} exceeds {RAW_MAX}"),
            ));
        }
        if let Some(last) = self.last_t {
            if frame.timestamp_ms < last {
                return Err(SessionFileError::parse(
                    self.line_no,
                    format!("timestamp {} precedes {last}", frame.timestamp_ms),
                ));
            }
        }
        self.last_t = Some(frame.timestamp_ms);
        Ok(frame)
    }
}

impl<R: BufRead> Iterator for SessionReader<R> {
    type Item = Result<SensorFrame, SessionFileError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse_frame(&line));
        }
    }
}

pub fn write_session<W: Write>(session: &Session, out: W) -> Result<W, SessionFileError> {
    let mut writer = SessionWriter::new(out, &session.meta)?;
    for frame in &session.frames {
        writer.write_frame(frame)?;
    }
    writer.into_inner()
}

pub fn read_session<R: BufRead>(input: R) -> Result<Session, SessionFileError> {
    let mut reader = SessionReader::new(input)?;
    let meta = reader.meta().clone();
    let frames = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok(Session { meta, frames })
}

pub fn write_session_file(session: &Session, path: &Path) -> Result<(), SessionFileError> {
    let file = File::create(path)?;
    write_session(session, BufWriter::new(file))?;
    Ok(())
}

pub fn read_session_file(path: &Path) -> Result<Session, SessionFileError> {
    read_session(BufReader::new(File::open(path)?))
}
