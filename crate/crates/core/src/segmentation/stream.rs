use std::collections::VecDeque;

use crate::telemetry::{QuartetScale, SensorFrame, SensorId};

use super::{ForceSample, InvalidSegmentationConfig, PressEvent, SegmentationConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{sensor}: sample at {t_ms} ms arrived after {last_ms} ms")]
pub struct OutOfOrderSample {
    pub sensor: SensorId,
    pub t_ms: u32,
    pub last_ms: u32,
}

#[derive(Debug, Clone, Copy)]
struct OpenPress {
    onset_ms: u32,
    peak_raw: u16,
}

#[derive(Debug, Clone, Copy)]
struct ClosedPress {
    onset_ms: u32,
    release_ms: u32,
    peak_raw: u16,
}

/// Incremental press detector for one sensor.
///
/// Produces exactly the events of [`super::segment_presses`] on the same
/// samples once [`PressDetector::finish`] is called. The median prefilter
/// is centered, so a sample is classified `median_window / 2` samples after
/// it arrives. A closed press is held back until no later press could still
/// merge into it.
#[derive(Debug, Clone)]
pub struct PressDetector {
    sensor: SensorId,
    cfg: SegmentationConfig,
    scale: QuartetScale,
    /// Raw samples from absolute index `buf_start` up to the newest.
    buf: VecDeque<ForceSample>,
    buf_start: usize,
    received: usize,
    next_index: usize,
    last_t: Option<u32>,
    open: Option<OpenPress>,
    held: Option<ClosedPress>,
    scratch: Vec<u16>,
}

impl PressDetector {
    pub fn new(sensor: SensorId, cfg: SegmentationConfig) -> Result<Self, InvalidSegmentationConfig> {
        cfg.validate()?;
        Ok(PressDetector {
            sensor,
            cfg,
            scale: cfg.scale(),
            buf: VecDeque::with_capacity(cfg.median_window + 1),
            buf_start: 0,
            received: 0,
            next_index: 0,
            last_t: None,
            open: None,
            held: None,
            scratch: vec![0; cfg.median_window],
        })
    }

    pub fn sensor(&self) -> SensorId {
        self.sensor
    }

    /// True while the filtered signal is inside a press.
    pub fn in_press(&self) -> bool {
        self.open.is_some()
    }

    /// Feed one sample. Samples repeating the previous timestamp are ignored.
    pub fn push(&mut self, sample: ForceSample) -> Result<Vec<PressEvent>, OutOfOrderSample> {
        if let Some(last) = self.last_t {
            if sample.t_ms < last {
                return Err(OutOfOrderSample {
                    sensor: self.sensor,
                    t_ms: sample.t_ms,
                    last_ms: last,
                });
            }
            if sample.t_ms == last {
                return Ok(Vec::new());
            }
        }
        self.last_t = Some(sample.t_ms);
        self.buf.push_back(sample);
        self.received += 1;

        let mut out = Vec::new();
        let half = self.cfg.half_window();
        while self.next_index + half < self.received {
            self.step(&mut out);
        }
        Ok(out)
    }

    /// Flush the filter tail, close any open press at the last timestamp and
    /// release held presses. The detector is reset afterwards.
    pub fn finish(&mut self) -> Vec<PressEvent> {
        let mut out = Vec::new();
        while self.next_index < self.received {
            self.step(&mut out);
        }
        if let (Some(open), Some(last_t)) = (self.open.take(), self.last_t) {
            // An open press already absorbed any held press at its onset.
            self.held = Some(ClosedPress {
                onset_ms: open.onset_ms,
                release_ms: last_t,
                peak_raw: open.peak_raw,
            });
        }
        if let Some(held) = self.held.take() {
            self.emit(held, &mut out);
        }
        *self = PressDetector::new(self.sensor, self.cfg).expect("config validated at construction");
        out
    }

    fn filtered_at(&mut self, index: usize) -> (ForceSample, u16) {
        let half = self.cfg.half_window();
        let last = self.received - 1;
        for k in 0..self.cfg.median_window {
            let j = (index + k).saturating_sub(half).min(last);
            self.scratch[k] = self.buf[j - self.buf_start].raw;
        }
        self.scratch.sort_unstable();
        (self.buf[index - self.buf_start], self.scratch[half])
    }

    fn step(&mut self, out: &mut Vec<PressEvent>) {
        let index = self.next_index;
        let (sample, y) = self.filtered_at(index);
        self.next_index += 1;

        match self.open.as_mut() {
            Some(open) => {
                open.peak_raw = open.peak_raw.max(sample.raw);
                if y < self.cfg.release_threshold {
                    let open = self.open.take().expect("matched Some");
                    self.held = Some(ClosedPress {
                        onset_ms: open.onset_ms,
                        release_ms: sample.t_ms,
                        peak_raw: open.peak_raw,
                    });
                }
            }
            None if y >= self.cfg.onset_threshold => {
                let mut open = OpenPress {
                    onset_ms: sample.t_ms,
                    peak_raw: sample.raw,
                };
                if let Some(held) = self.held.take() {
                    if sample.t_ms - held.release_ms < self.cfg.min_gap_ms {
                        open.onset_ms = held.onset_ms;
                        open.peak_raw = open.peak_raw.max(held.peak_raw);
                    } else {
                        self.emit(held, out);
                    }
                }
                self.open = Some(open);
            }
            None => {
                if let Some(held) = self.held {
                    if sample.t_ms - held.release_ms >= self.cfg.min_gap_ms {
                        self.held = None;
                        self.emit(held, out);
                    }
                }
            }
        }

        // Keep samples from next_index - half onward.
        let keep_from = self.next_index.saturating_sub(self.cfg.half_window());
        while self.buf_start < keep_from {
            self.buf.pop_front();
            self.buf_start += 1;
        }
    }

    fn emit(&self, press: ClosedPress, out: &mut Vec<PressEvent>) {
        let duration_ms = press.release_ms - press.onset_ms;
        if duration_ms >= self.cfg.min_press_ms && press.peak_raw >= self.cfg.onset_threshold {
            out.push(PressEvent {
                sensor: self.sensor,
                onset_ms: press.onset_ms,
                release_ms: press.release_ms,
                peak_raw: press.peak_raw,
                peak_quartet: self.scale.classify(press.peak_raw),
                duration_ms,
            });
        }
    }
}

/// Twelve independent detectors driven frame by frame.
#[derive(Debug, Clone)]
pub struct FrameSegmenter {
    detectors: Vec<PressDetector>,
}

impl FrameSegmenter {
    pub fn new(cfg: SegmentationConfig) -> Result<Self, InvalidSegmentationConfig> {
        let detectors = SensorId::ALL
            .iter()
            .map(|&s| PressDetector::new(s, cfg))
            .collect::<Result<_, _>>()?;
        Ok(FrameSegmenter { detectors })
    }

    pub fn push_frame(&mut self, frame: &SensorFrame) -> Result<Vec<PressEvent>, OutOfOrderSample> {
        let mut out = Vec::new();
        for det in &mut self.detectors {
            let raw = frame.force(det.sensor());
            out.extend(det.push(ForceSample {
                t_ms: frame.timestamp_ms,
                raw,
            })?);
        }
        Ok(out)
    }

    pub fn in_press(&self, sensor: SensorId) -> bool {
        self.detectors[sensor.index()].in_press()
    }

    pub fn finish(&mut self) -> Vec<PressEvent> {
        let mut out: Vec<PressEvent> = self.detectors.iter_mut().flat_map(|d| d.finish()).collect();
        super::sort_events(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::segment_presses;

    fn samples(values: &[u16]) -> Vec<ForceSample> {
        values
            .iter()
            .enumerate()
            .map(|(i, &raw)| ForceSample { t_ms: i as u32 * 20, raw })
            .collect()
    }

    fn run(values: &[u16], cfg: SegmentationConfig) -> Vec<PressEvent> {
        let mut det = PressDetector::new(SensorId::T1, cfg).unwrap();
        let mut out = Vec::new();
        for s in samples(values) {
            out.extend(det.push(s).unwrap());
        }
        out.extend(det.finish());
        out
    }

    #[test]
    fn matches_batch_on_seven_sample_trace() {
        let cfg = SegmentationConfig { min_press_ms: 40, ..SegmentationConfig::default() };
        let values = [0, 0, 100, 400, 100, 0, 0];
        let batch = segment_presses(SensorId::T1, &samples(&values), &cfg).unwrap();
        assert_eq!(batch.len(), 1);
        assert_eq!(run(&values, cfg), batch);
    }

    #[test]
    fn open_press_closed_at_last_timestamp() {
        let cfg = SegmentationConfig { min_press_ms: 40, ..SegmentationConfig::default() };
        let out = run(&[0, 0, 300, 300, 300, 300, 300], cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].release_ms, 120);
        assert_eq!(out[0].peak_raw, 300);
    }

    #[test]
    fn empty_stream_finishes_empty() {
        let mut det = PressDetector::new(SensorId::E3, SegmentationConfig::default()).unwrap();
        assert!(det.finish().is_empty());
    }

    #[test]
    fn press_is_emitted_once_gap_elapses() {
        let cfg = SegmentationConfig { median_window: 1, min_press_ms: 40, ..SegmentationConfig::default() };
        let mut det = PressDetector::new(SensorId::T1, cfg).unwrap();
        let mut emitted_at = None;
        let values = [0, 200, 200, 200, 0, 0, 0, 0, 0];
        for (i, s) in samples(&values).into_iter().enumerate() {
            if !det.push(s).unwrap().is_empty() {
                emitted_at = Some(i);
            }
        }
        // release at sample 4 (80 ms); gap reaches 50 ms at sample 7 (140 ms)
        assert_eq!(emitted_at, Some(7));
        assert!(det.finish().is_empty());
    }

    #[test]
    fn out_of_order_rejected_and_duplicates_ignored() {
        let mut det = PressDetector::new(SensorId::T1, SegmentationConfig::default()).unwrap();
        det.push(ForceSample { t_ms: 40, raw: 0 }).unwrap();
        assert!(det.push(ForceSample { t_ms: 40, raw: 900 }).unwrap().is_empty());
        assert_eq!(
            det.push(ForceSample { t_ms: 20, raw: 0 }),
            Err(OutOfOrderSample { sensor: SensorId::T1, t_ms: 20, last_ms: 40 })
        );
    }

    #[test]
    fn detector_resets_after_finish() {
        let cfg = SegmentationConfig { min_press_ms: 40, ..SegmentationConfig::default() };
        let mut det = PressDetector::new(SensorId::T1, cfg).unwrap();
        for s in samples(&[0, 0, 100, 400, 100, 0, 0]) {
            det.push(s).unwrap();
        }
        assert_eq!(det.finish().len(), 1);
        det.push(ForceSample { t_ms: 0, raw: 0 }).unwrap();
        assert!(det.finish().is_empty());
    }
}
