use serde::{Deserialize, Serialize};

use super::force::RAW_MAX;
use super::sensor::{SensorId, SENSOR_COUNT};

/// Wrist range of motion accepted as anatomically plausible, in degrees.
/// Dorsal flexion and radial deviation are positive.
pub const PITCH_RANGE: (f64, f64) = (-44.0, 78.0);
pub const YAW_RANGE: (f64, f64) = (-28.0, 17.0);
pub const ROLL_RANGE: (f64, f64) = (-180.0, 180.0);

/// Hand orientation in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Orientation {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Orientation {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Orientation { roll, pitch, yaw }
    }
}

/// Validity bits carried with every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameFlags(pub u8);

impl FrameFlags {
    /// Orientation outside the wrist range of motion.
    pub const ORIENTATION_IMPLAUSIBLE: u8 = 0x01;
    /// At least one channel saturated at the ADC ceiling.
    pub const FORCE_SATURATED: u8 = 0x02;
    /// The sender dropped samples immediately before this frame.
    pub const GAP_BEFORE: u8 = 0x04;

    pub fn contains(self, bit: u8) -> bool {
        self.0 & bit == bit
    }

    pub fn with(self, bit: u8) -> Self {
        FrameFlags(self.0 | bit)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// Optional camera marker positions in millimetres. Carried, never processed.
pub type Markers = [[f64; 3]; 4];

/// One timestamped sample of all twelve force channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub seq: u32,
    pub timestamp_ms: u32,
    pub force_raw: [u16; SENSOR_COUNT],
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markers: Option<Markers>,
    #[serde(default)]
    pub flags: FrameFlags,
}

impl SensorFrame {
    pub fn new(seq: u32, timestamp_ms: u32, force_raw: [u16; SENSOR_COUNT]) -> Self {
        SensorFrame {
            seq,
            timestamp_ms,
            force_raw,
            orientation: Orientation::default(),
            markers: None,
            flags: FrameFlags::default(),
        }
    }

    pub fn force(&self, sensor: SensorId) -> u16 {
        self.force_raw[sensor.index()]
    }

    /// The first channel outside the 10-bit range, if any.
    pub fn out_of_range_channel(&self) -> Option<(SensorId, u16)> {
        self.force_raw
            .iter()
            .enumerate()
            .find(|(_, &v)| v > RAW_MAX)
            .map(|(i, &v)| (SensorId::ALL[i], v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Roll,
    Pitch,
    Yaw,
}

/// Outcome of the range-of-motion check. Advisory only: frames are never rejected.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Plausibility {
    pub out_of_range: Vec<Axis>,
}

impl Plausibility {
    pub fn is_plausible(&self) -> bool {
        self.out_of_range.is_empty()
    }
}

fn within(value: f64, (lo, hi): (f64, f64)) -> bool {
    // NaN fails both comparisons.
    value >= lo && value <= hi
}

pub fn validate_orientation(o: &Orientation) -> Plausibility {
    let mut out_of_range = Vec::new();
    if !within(o.roll, ROLL_RANGE) {
        out_of_range.push(Axis::Roll);
    }
    if !within(o.pitch, PITCH_RANGE) {
        out_of_range.push(Axis::Pitch);
    }
    if !within(o.yaw, YAW_RANGE) {
        out_of_range.push(Axis::Yaw);
    }
    Plausibility { out_of_range }
}
