//! Fixed 42-byte little-endian frame.
//!
//! ```text
//! offset  size  field
//!      0     2  sync          0xA5 0x5A
//!      2     1  version       1
//!      3     2  seq           u16, low 16 bits of the frame counter
//!      5     4  timestamp_ms  u32
//!      9    24  force         12 x u16, only the low 10 bits are meaningful
//!     33     6  roll/pitch/yaw  3 x i16, centidegrees
//!     39     1  flags         u8
//!     40     2  crc           CRC-16/CCITT-FALSE over bytes 0..40
//! ```

use crate::telemetry::{FrameFlags, Orientation, SensorFrame, SensorId, RAW_MAX, SENSOR_COUNT};

use super::crc::crc16_ccitt_false;

pub const FRAME_LEN: usize = 42;
pub const SYNC: [u8; 2] = [0xA5, 0x5A];
pub const PROTOCOL_VERSION: u8 = 1;

const CRC_OFFSET: usize = FRAME_LEN - 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireField {
    Force(SensorId),
    Roll,
    Pitch,
    Yaw,
}

impl std::fmt::Display for WireField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WireField::Force(sensor) => write!(f, "force.{sensor}"),
            WireField::Roll => f.write_str("roll"),
            WireField::Pitch => f.write_str("pitch"),
            WireField::Yaw => f.write_str("yaw"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodeError {
    #[error("field {field} out of range: {value}")]
    FieldOutOfRange { field: WireField, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("bad sync: {skipped} byte(s) without a frame header")]
    BadSync { skipped: usize },
    #[error("bad length: expected {FRAME_LEN} bytes, got {found}")]
    BadLength { found: usize },
    #[error("bad crc: frame carries {carried:#06x}, computed {computed:#06x}")]
    BadCrc { carried: u16, computed: u16 },
    #[error("unsupported protocol version {0}")]
    BadVersion(u8),
    #[error("force channel {sensor} reads {value}, above the 10-bit range")]
    ForceOutOfRange { sensor: SensorId, value: u16 },
}

impl DecodeError {
    pub fn code(&self) -> &'static str {
        match self {
            DecodeError::BadSync { .. } => "bad_sync",
            DecodeError::BadLength { .. } => "bad_length",
            DecodeError::BadCrc { .. } => "bad_crc",
            DecodeError::BadVersion(_) => "bad_version",
            DecodeError::ForceOutOfRange { .. } => "force_out_of_range",
        }
    }
}

fn to_centidegrees(field: WireField, degrees: f64) -> Result<i16, EncodeError> {
    let centi = (degrees * 100.0).round();
    if !centi.is_finite() || centi < f64::from(i16::MIN) || centi > f64::from(i16::MAX) {
        return Err(EncodeError::FieldOutOfRange {
            field,
            value: degrees,
        });
    }
    Ok(centi as i16)
}

/// Encode a frame. The sequence counter is truncated to its low 16 bits and
/// orientation is rounded to the nearest centidegree.
pub fn encode_frame(frame: &SensorFrame) -> Result<[u8; FRAME_LEN], EncodeError> {
    if let Some((sensor, value)) = frame.out_of_range_channel() {
        return Err(EncodeError::FieldOutOfRange {
            field: WireField::Force(sensor),
            value: f64::from(value),
        });
    }
    let roll = to_centidegrees(WireField::Roll, frame.orientation.roll)?;
    let pitch = to_centidegrees(WireField::Pitch, frame.orientation.pitch)?;
    let yaw = to_centidegrees(WireField::Yaw, frame.orientation.yaw)?;

    let mut out = [0u8; FRAME_LEN];
    out[0..2].copy_from_slice(&SYNC);
    out[2] = PROTOCOL_VERSION;
    out[3..5].copy_from_slice(&(frame.seq as u16).to_le_bytes());
    out[5..9].copy_from_slice(&frame.timestamp_ms.to_le_bytes());
    for (i, value) in frame.force_raw.iter().enumerate() {
        let at = 9 + 2 * i;
        out[at..at + 2].copy_from_slice(&value.to_le_bytes());
    }
    out[33..35].copy_from_slice(&roll.to_le_bytes());
    out[35..37].copy_from_slice(&pitch.to_le_bytes());
    out[37..39].copy_from_slice(&yaw.to_le_bytes());
    out[39] = frame.flags.0;
    let crc = crc16_ccitt_false(&out[..CRC_OFFSET]);
    out[CRC_OFFSET..].copy_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn i16_at(bytes: &[u8], at: usize) -> i16 {
    i16::from_le_bytes([bytes[at], bytes[at + 1]])
}

/// Decode exactly one frame. The integrity check runs before the header
/// checks, so any corruption of a transmitted frame surfaces as `BadCrc`.
pub fn decode_frame(bytes: &[u8]) -> Result<SensorFrame, DecodeError> {
    if bytes.len() != FRAME_LEN {
        return Err(DecodeError::BadLength { found: bytes.len() });
    }
    let carried = u16_at(bytes, CRC_OFFSET);
    let computed = crc16_ccitt_false(&bytes[..CRC_OFFSET]);
    if carried != computed {
        return Err(DecodeError::BadCrc { carried, computed });
    }
    if bytes[0..2] != SYNC {
        return Err(DecodeError::BadSync { skipped: 0 });
    }
    if bytes[2] != PROTOCOL_VERSION {
        return Err(DecodeError::BadVersion(bytes[2]));
    }
    let mut force_raw = [0u16; SENSOR_COUNT];
    for (i, slot) in force_raw.iter_mut().enumerate() {
        let value = u16_at(bytes, 9 + 2 * i);
        if value > RAW_MAX {
            return Err(DecodeError::ForceOutOfRange {
                sensor: SensorId::ALL[i],
                value,
            });
        }
        *slot = value;
    }
    Ok(SensorFrame {
        seq: u32::from(u16_at(bytes, 3)),
        timestamp_ms: u32::from_le_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]),
        force_raw,
        orientation: Orientation {
            roll: f64::from(i16_at(bytes, 33)) / 100.0,
            pitch: f64::from(i16_at(bytes, 35)) / 100.0,
            yaw: f64::from(i16_at(bytes, 37)) / 100.0,
        },
        markers: None,
        flags: FrameFlags(bytes[39]),
    })
}
