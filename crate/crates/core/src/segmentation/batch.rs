use crate::telemetry::{SensorFrame, SensorId};

use super::{ForceSample, PressEvent, SegmentationConfig, SegmentationError};

/// Drop repeated timestamps (first sample wins) and reject time running backwards.
fn dedup(trace: &[ForceSample]) -> Result<Vec<ForceSample>, SegmentationError> {
    let mut out: Vec<ForceSample> = Vec::with_capacity(trace.len());
    for (index, s) in trace.iter().enumerate() {
        if let Some(prev) = out.last() {
            if s.t_ms < prev.t_ms {
                return Err(SegmentationError::NonMonotonicTimestamps {
                    index,
                    t_ms: s.t_ms,
                    previous_ms: prev.t_ms,
                });
            }
            if s.t_ms == prev.t_ms {
                continue;
            }
        }
        out.push(*s);
    }
    Ok(out)
}

/// Centered running median with the edge samples replicated outward.
pub(crate) fn median_filter(raw: &[u16], window: usize) -> Vec<u16> {
    let half = window / 2;
    let last = raw.len().saturating_sub(1);
    let mut scratch = vec![0u16; window];
    (0..raw.len())
        .map(|i| {
            for (k, slot) in scratch.iter_mut().enumerate() {
                let j = (i + k).saturating_sub(half).min(last);
                *slot = raw[j];
            }
            scratch.sort_unstable();
            scratch[half]
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    onset_ms: u32,
    release_ms: u32,
    peak_raw: u16,
}

/// Segment one sensor's force trace into press events.
///
/// Pipeline: dedup, median prefilter, hysteresis (enter at `>= onset`, leave
/// at `< release`), merge presses separated by less than `min_gap_ms`, then
/// drop presses shorter than `min_press_ms` or whose raw peak is below the
/// onset threshold. Peaks come from the unfiltered samples in
/// `[onset, release]`. A press still open at the end of the trace is closed
/// at the final timestamp.
pub fn segment_presses(
    sensor: SensorId,
    trace: &[ForceSample],
    cfg: &SegmentationConfig,
) -> Result<Vec<PressEvent>, SegmentationError> {
    cfg.validate()?;
    if trace.is_empty() {
        return Err(SegmentationError::EmptyTrace);
    }
    let samples = dedup(trace)?;
    let raw: Vec<u16> = samples.iter().map(|s| s.raw).collect();
    let filtered = median_filter(&raw, cfg.median_window);

    let mut intervals: Vec<Interval> = Vec::new();
    let mut open: Option<Interval> = None;
    for (i, s) in samples.iter().enumerate() {
        let y = filtered[i];
        match open.as_mut() {
            None => {
                if y >= cfg.onset_threshold {
                    open = Some(Interval {
                        onset_ms: s.t_ms,
                        release_ms: s.t_ms,
                        peak_raw: s.raw,
                    });
                }
            }
            Some(press) => {
                press.peak_raw = press.peak_raw.max(s.raw);
                if y < cfg.release_threshold {
                    press.release_ms = s.t_ms;
                    intervals.extend(open.take());
                }
            }
        }
    }
    if let Some(mut press) = open {
        press.release_ms = samples.last().map_or(press.onset_ms, |s| s.t_ms);
        intervals.push(press);
    }

    let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
    for next in intervals {
        match merged.last_mut() {
            Some(prev) if next.onset_ms - prev.release_ms < cfg.min_gap_ms => {
                prev.release_ms = next.release_ms;
                prev.peak_raw = prev.peak_raw.max(next.peak_raw);
            }
            _ => merged.push(next),
        }
    }

    let scale = cfg.scale();
    Ok(merged
        .into_iter()
        .filter(|p| p.release_ms - p.onset_ms >= cfg.min_press_ms && p.peak_raw >= cfg.onset_threshold)
        .map(|p| PressEvent {
            sensor,
            onset_ms: p.onset_ms,
            release_ms: p.release_ms,
            peak_raw: p.peak_raw,
            peak_quartet: scale.classify(p.peak_raw),
            duration_ms: p.release_ms - p.onset_ms,
        })
        .collect())
}

/// One sensor's channel extracted from a frame sequence.
pub fn sensor_trace(frames: &[SensorFrame], sensor: SensorId) -> Vec<ForceSample> {
    frames
        .iter()
        .map(|f| ForceSample {
            t_ms: f.timestamp_ms,
            raw: f.force(sensor),
        })
        .collect()
}

/// Segment all twelve channels. Events are ordered by onset, then sensor.
pub fn segment_frames(
    frames: &[SensorFrame],
    cfg: &SegmentationConfig,
) -> Result<Vec<PressEvent>, SegmentationError> {
    let mut events = Vec::new();
    for sensor in SensorId::ALL {
        events.extend(segment_presses(sensor, &sensor_trace(frames, sensor), cfg)?);
    }
    super::sort_events(&mut events);
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::ForceQuartet;

    fn trace(values: &[u16], step: u32) -> Vec<ForceSample> {
        values
            .iter()
            .enumerate()
            .map(|(i, &raw)| ForceSample { t_ms: i as u32 * step, raw })
            .collect()
    }

    fn relaxed() -> SegmentationConfig {
        SegmentationConfig {
            min_press_ms: 40,
            ..SegmentationConfig::default()
        }
    }

    #[test]
    fn constant_zero_has_no_presses() {
        let events = segment_presses(SensorId::T1, &trace(&[0; 50], 20), &SegmentationConfig::default()).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn seven_sample_bump() {
        // Filtered (window 5, edges replicated): 0,0,100,100,100,0,0.
        // Onset at sample 2 (40 ms), release at sample 5 (100 ms).
        let events = segment_presses(SensorId::T2, &trace(&[0, 0, 100, 400, 100, 0, 0], 20), &relaxed()).unwrap();
        assert_eq!(
            events,
            vec![PressEvent {
                sensor: SensorId::T2,
                onset_ms: 40,
                release_ms: 100,
                peak_raw: 400,
                peak_quartet: ForceQuartet::Q3,
                duration_ms: 60,
            }]
        );
        // 60 ms is below the default 100 ms minimum.
        let strict = segment_presses(SensorId::T2, &trace(&[0, 0, 100, 400, 100, 0, 0], 20), &SegmentationConfig::default()).unwrap();
        assert!(strict.is_empty());
    }

    #[test]
    fn close_bumps_merge() {
        let cfg = SegmentationConfig { median_window: 1, ..relaxed() };
        // 10 ms spacing: press 20..60, release at 60, next onset at 90 (gap 30 < 50).
        let values = [0, 0, 200, 200, 200, 200, 0, 0, 0, 300, 300, 300, 300, 300, 0, 0];
        let events = segment_presses(SensorId::T1, &trace(&values, 10), &cfg).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!((events[0].onset_ms, events[0].release_ms, events[0].peak_raw), (20, 140, 300));

        // Same shape with a 60 ms gap stays split.
        let values = [0, 0, 200, 200, 200, 200, 0, 0, 0, 0, 0, 0, 300, 300, 300, 300, 300, 0];
        let events = segment_presses(SensorId::T1, &trace(&values, 10), &cfg).unwrap();
        assert_eq!(events.len(), 2);
    }

    #[test]
    fn open_press_closed_at_end() {
        let events = segment_presses(SensorId::S1, &trace(&[0, 0, 200, 200, 200, 200, 200, 200, 200], 20), &relaxed()).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].release_ms, 160);
        assert_eq!(events[0].onset_ms, 40);
    }

    #[test]
    fn hysteresis_holds_between_thresholds() {
        let cfg = SegmentationConfig { median_window: 1, ..relaxed() };
        // Dips to 30 (between release 25 and onset 40) do not end the press.
        let values = [0, 50, 30, 30, 50, 30, 0];
        let events = segment_presses(SensorId::T1, &trace(&values, 20), &cfg).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!((events[0].onset_ms, events[0].release_ms), (20, 120));
    }

    #[test]
    fn peak_below_onset_is_dropped() {
        // The median crosses onset while the raw samples inside the press stay low.
        let cfg = SegmentationConfig { min_press_ms: 1, ..SegmentationConfig::default() };
        let values = [0, 0, 50, 50, 10, 10, 50, 0, 0, 0];
        let events = segment_presses(SensorId::T1, &trace(&values, 20), &cfg).unwrap();
        assert!(events.iter().all(|e| e.peak_raw >= cfg.onset_threshold));
    }

    #[test]
    fn errors() {
        let cfg = SegmentationConfig::default();
        assert_eq!(segment_presses(SensorId::T1, &[], &cfg), Err(SegmentationError::EmptyTrace));
        let bad = [ForceSample { t_ms: 20, raw: 0 }, ForceSample { t_ms: 10, raw: 0 }];
        assert_eq!(
            segment_presses(SensorId::T1, &bad, &cfg),
            Err(SegmentationError::NonMonotonicTimestamps { index: 1, t_ms: 10, previous_ms: 20 })
        );
        let invalid = SegmentationConfig { median_window: 2, ..cfg };
        assert!(matches!(
            segment_presses(SensorId::T1, &trace(&[0], 20), &invalid),
            Err(SegmentationError::InvalidConfig(_))
        ));
    }

    #[test]
    fn duplicate_timestamps_keep_first() {
        let cfg = SegmentationConfig { median_window: 1, ..relaxed() };
        let samples = [
            ForceSample { t_ms: 0, raw: 0 },
            ForceSample { t_ms: 20, raw: 100 },
            ForceSample { t_ms: 20, raw: 900 },
            ForceSample { t_ms: 40, raw: 100 },
            ForceSample { t_ms: 60, raw: 100 },
            ForceSample { t_ms: 80, raw: 0 },
        ];
        let events = segment_presses(SensorId::T1, &samples, &cfg).unwrap();
        assert_eq!(events[0].peak_raw, 100);
    }

    #[test]
    fn median_filter_replicates_edges() {
        assert_eq!(median_filter(&[0, 0, 100, 400, 100, 0, 0], 5), vec![0, 0, 100, 100, 100, 0, 0]);
        assert_eq!(median_filter(&[9], 5), vec![9]);
        assert_eq!(median_filter(&[5, 1], 3), vec![5, 1]);
        assert_eq!(median_filter(&[3, 1, 2], 1), vec![3, 1, 2]);
    }
}
