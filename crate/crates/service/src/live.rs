//! Per-session live state: decode, segment, record, and decide what to publish.

use palpation_core::segmentation::{FrameSegmenter, PressEvent, SegmentationConfig};
use palpation_core::telemetry::{
    quartet_to_color, validate_orientation, Orientation, PerSensor, QuartetScale, SensorFrame, SensorId,
    Session, SessionMeta,
};
use palpation_core::wire::FrameDecoder;

use crate::messages::{FeedbackBody, SensorReading, Snapshot};

/// Minimum session-clock spacing between snapshots (at most 20 per second).
pub const SNAPSHOT_INTERVAL_MS: u32 = 50;

/// What the feedback panel shows for one session right now.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveSensorState {
    pub t_ms: Option<u32>,
    pub frames: u64,
    pub sensors: PerSensor<SensorReading>,
    pub orientation: Orientation,
    pub orientation_plausible: bool,
}

impl Default for LiveSensorState {
    fn default() -> Self {
        LiveSensorState {
            t_ms: None,
            frames: 0,
            sensors: PerSensor::from_fn(|_| SensorReading::default()),
            orientation: Orientation::default(),
            orientation_plausible: true,
        }
    }
}

/// A closed session ready for assessment.
#[derive(Debug, Clone, PartialEq)]
pub struct FinishedSession {
    pub session: Session,
    pub events: Vec<PressEvent>,
    pub codec_errors: u64,
}

pub struct LiveSession {
    meta: SessionMeta,
    scale: QuartetScale,
    decoder: FrameDecoder,
    segmenter: FrameSegmenter,
    state: LiveSensorState,
    frames: Vec<SensorFrame>,
    events: Vec<PressEvent>,
    codec_errors: u64,
    last_snapshot_ms: Option<u32>,
}

impl LiveSession {
    pub fn new(meta: SessionMeta, cfg: SegmentationConfig) -> Result<Self, String> {
        let segmenter = FrameSegmenter::new(cfg).map_err(|e| e.to_string())?;
        Ok(LiveSession {
            meta,
            scale: cfg.scale(),
            decoder: FrameDecoder::new(),
            segmenter,
            state: LiveSensorState::default(),
            frames: Vec::new(),
            events: Vec::new(),
            codec_errors: 0,
            last_snapshot_ms: None,
        })
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    pub fn state(&self) -> &LiveSensorState {
        &self.state
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn press_count(&self) -> usize {
        self.events.len()
    }

    pub fn codec_errors(&self) -> u64 {
        self.codec_errors
    }

    /// Feed raw wire bytes. Corrupt frames are counted and skipped.
    pub fn ingest_bytes(&mut self, bytes: &[u8]) -> Vec<FeedbackBody> {
        let mut out = Vec::new();
        for result in self.decoder.feed(bytes) {
            match result {
                Ok(frame) => self.accept(frame, &mut out),
                Err(_) => self.codec_errors += 1,
            }
        }
        out
    }

    /// Feed an already decoded frame.
    pub fn ingest_frame(&mut self, frame: SensorFrame) -> Vec<FeedbackBody> {
        let mut out = Vec::new();
        self.accept(frame, &mut out);
        out
    }

    fn accept(&mut self, frame: SensorFrame, out: &mut Vec<FeedbackBody>) {
        let out_of_order = self.frames.last().is_some_and(|p| frame.timestamp_ms < p.timestamp_ms);
        if out_of_order || frame.out_of_range_channel().is_some() {
            self.codec_errors += 1;
            return;
        }
        let completed = match self.segmenter.push_frame(&frame) {
            Ok(events) => events,
            Err(_) => {
                self.codec_errors += 1;
                return;
            }
        };

        for s in SensorId::ALL {
            let raw = frame.force(s);
            let quartet = self.scale.classify(raw);
            let r = &mut self.state.sensors[s];
            r.raw = raw;
            r.quartet = quartet;
            r.color = quartet_to_color(quartet);
        }
        self.record_presses(completed, out);
        self.state.t_ms = Some(frame.timestamp_ms);
        self.state.frames += 1;
        self.state.orientation = frame.orientation;
        self.state.orientation_plausible = validate_orientation(&frame.orientation).is_plausible();

        let due = self
            .last_snapshot_ms
            .is_none_or(|last| frame.timestamp_ms.saturating_sub(last) >= SNAPSHOT_INTERVAL_MS);
        self.frames.push(frame);
        if due {
            self.last_snapshot_ms = self.state.t_ms;
            out.push(FeedbackBody::Snapshot(self.snapshot()));
        }
    }

    fn record_presses(&mut self, completed: Vec<PressEvent>, out: &mut Vec<FeedbackBody>) {
        for e in completed {
            let r = &mut self.state.sensors[e.sensor];
            r.presses += 1;
            r.last_peak = Some(e.peak_raw);
            self.events.push(e);
            out.push(FeedbackBody::PressCompleted(e));
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            t_ms: self.state.t_ms.unwrap_or(0),
            frames: self.state.frames,
            sensors: self.state.sensors,
            orientation: self.state.orientation,
            orientation_plausible: self.state.orientation_plausible,
            codec_errors: self.codec_errors,
        }
    }

    /// Events a batch pass over the frames so far would report: everything
    /// already published plus whatever closing the stream now would flush.
    pub fn provisional_events(&self) -> Vec<PressEvent> {
        let mut events = self.events.clone();
        let mut probe = self.segmenter.clone();
        events.extend(probe.finish());
        palpation_core::segmentation::sort_events(&mut events);
        events
    }

    /// Close the stream. Returns the recording plus any messages the flush produced.
    pub fn finish(mut self) -> (FinishedSession, Vec<FeedbackBody>) {
        if self.decoder.finish().is_some() {
            self.codec_errors += 1;
        }
        let mut out = Vec::new();
        let flushed = self.segmenter.finish();
        self.record_presses(flushed, &mut out);
        let mut events = self.events;
        palpation_core::segmentation::sort_events(&mut events);
        let finished = FinishedSession {
            session: Session {
                meta: self.meta,
                frames: self.frames,
            },
            events,
            codec_errors: self.codec_errors,
        };
        (finished, out)
    }
}
