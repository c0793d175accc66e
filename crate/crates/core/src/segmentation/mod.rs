//! Press–release segmentation of per-sensor force traces.

mod batch;
mod config;
mod stats;
mod stream;

use serde::{Deserialize, Serialize};

use crate::telemetry::{ForceQuartet, SensorId};

pub use batch::{segment_frames, segment_presses, sensor_trace};
pub use config::{InvalidSegmentationConfig, SegmentationConfig};
pub use stats::{press_stats, PressStats};
pub use stream::{FrameSegmenter, OutOfOrderSample, PressDetector};

/// One raw reading of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForceSample {
    pub t_ms: u32,
    pub raw: u16,
}

/// One contiguous press–release action on one sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PressEvent {
    pub sensor: SensorId,
    pub onset_ms: u32,
    pub release_ms: u32,
    /// Highest unfiltered reading within `[onset_ms, release_ms]`.
    pub peak_raw: u16,
    pub peak_quartet: ForceQuartet,
    pub duration_ms: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SegmentationError {
    #[error("empty force trace")]
    EmptyTrace,
    #[error("timestamp {t_ms} ms at sample {index} precedes {previous_ms} ms")]
    NonMonotonicTimestamps {
        index: usize,
        t_ms: u32,
        previous_ms: u32,
    },
    #[error(transparent)]
    InvalidConfig(#[from] InvalidSegmentationConfig),
}

/// Canonical event order: onset time, then channel.
pub fn sort_events(events: &mut [PressEvent]) {
    events.sort_by_key(|e| (e.onset_ms, e.sensor));
}
