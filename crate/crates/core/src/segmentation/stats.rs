use serde::{Deserialize, Serialize};

use crate::telemetry::PerSensor;

use super::PressEvent;

/// Per-sensor press counts, peaks and durations for one session.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PressStats {
    pub counts: PerSensor<u32>,
    pub total: u32,
    /// Raw peak of each press, in onset order.
    pub peaks: PerSensor<Vec<u16>>,
    /// Duration of each press in milliseconds, in onset order.
    pub durations_ms: PerSensor<Vec<u32>>,
}

pub fn press_stats(events: &[PressEvent]) -> PressStats {
    let mut ordered: Vec<&PressEvent> = events.iter().collect();
    ordered.sort_by_key(|e| (e.onset_ms, e.sensor));

    let mut stats = PressStats::default();
    for e in ordered {
        stats.counts[e.sensor] += 1;
        stats.peaks[e.sensor].push(e.peak_raw);
        stats.durations_ms[e.sensor].push(e.duration_ms);
    }
    stats.total = stats.counts.values().iter().sum();
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{classify_force_level, SensorId};

    fn press(sensor: SensorId, onset_ms: u32, peak_raw: u16) -> PressEvent {
        PressEvent {
            sensor,
            onset_ms,
            release_ms: onset_ms + 200,
            peak_raw,
            peak_quartet: classify_force_level(peak_raw),
            duration_ms: 200,
        }
    }

    #[test]
    fn empty_is_all_zero() {
        let s = press_stats(&[]);
        assert_eq!(s.total, 0);
        assert!(s.counts.values().iter().all(|&c| c == 0));
    }

    #[test]
    fn counts_are_additive() {
        let mut events: Vec<PressEvent> = (0..6).map(|i| press(SensorId::T1, i * 1000, 300)).collect();
        events.push(press(SensorId::E1, 500, 100));
        events.push(press(SensorId::E1, 100, 120));
        let s = press_stats(&events);
        assert_eq!(s.counts[SensorId::T1], 6);
        assert_eq!(s.counts[SensorId::E1], 2);
        assert_eq!(s.total, 8);
        assert_eq!(s.peaks[SensorId::E1], vec![120, 100]);
        assert_eq!(s.durations_ms[SensorId::T1].len(), 6);
        assert_eq!(s.counts[SensorId::B3], 0);
    }
}
