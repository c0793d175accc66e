use serde::{Deserialize, Serialize};

use crate::telemetry::{QuartetScale, DEFAULT_QUARTET_BOUND};

/// Press detector parameters. All thresholds are raw arb units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// A press starts when the filtered signal reaches this value.
    pub onset_threshold: u16,
    /// A press ends when the filtered signal drops below this value.
    pub release_threshold: u16,
    /// Presses shorter than this are discarded (after merging).
    pub min_press_ms: u32,
    /// Presses separated by less than this are merged.
    pub min_gap_ms: u32,
    /// Centered median prefilter length in samples; odd.
    pub median_window: usize,
    /// Upper bound of the graded force region used to label press peaks.
    pub quartet_bound: u16,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            onset_threshold: 40,
            release_threshold: 25,
            min_press_ms: 100,
            min_gap_ms: 50,
            median_window: 5,
            quartet_bound: DEFAULT_QUARTET_BOUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid segmentation config: {0}")]
pub struct InvalidSegmentationConfig(pub String);

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), InvalidSegmentationConfig> {
        let fail = |msg: String| Err(InvalidSegmentationConfig(msg));
        if self.release_threshold >= self.onset_threshold {
            return fail(format!(
                "release_threshold {} must be below onset_threshold {}",
                self.release_threshold, self.onset_threshold
            ));
        }
        if self.min_press_ms == 0 {
            return fail("min_press_ms must be positive".into());
        }
        if self.median_window == 0 || self.median_window.is_multiple_of(2) {
            return fail(format!("median_window {} must be odd and >= 1", self.median_window));
        }
        if QuartetScale::new(self.quartet_bound).is_none() {
            return fail(format!("quartet_bound {} must be at least 4", self.quartet_bound));
        }
        Ok(())
    }

    pub fn scale(&self) -> QuartetScale {
        QuartetScale::new(self.quartet_bound).unwrap_or_default()
    }

    pub(crate) fn half_window(&self) -> usize {
        self.median_window / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SegmentationConfig::default();
        assert_eq!(
            (cfg.onset_threshold, cfg.release_threshold, cfg.min_press_ms, cfg.min_gap_ms, cfg.median_window),
            (40, 25, 100, 50, 5)
        );
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = SegmentationConfig::default();
        assert!(SegmentationConfig { release_threshold: 40, ..base }.validate().is_err());
        assert!(SegmentationConfig { min_press_ms: 0, ..base }.validate().is_err());
        assert!(SegmentationConfig { median_window: 4, ..base }.validate().is_err());
        assert!(SegmentationConfig { median_window: 0, ..base }.validate().is_err());
        assert!(SegmentationConfig { median_window: 1, ..base }.validate().is_ok());
        assert!(SegmentationConfig { quartet_bound: 2, ..base }.validate().is_err());
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg: SegmentationConfig = toml::from_str("onset_threshold = 60").unwrap();
        assert_eq!(cfg.onset_threshold, 60);
        assert_eq!(cfg.median_window, 5);
        assert!(toml::from_str::<SegmentationConfig>("bogus = 1").is_err());
    }
}
