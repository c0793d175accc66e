use serde::{Deserialize, Serialize};

use crate::segmentation::PressStats;
use crate::telemetry::{PerSensor, SensorId};

/// Each sensor's share of the session's presses, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionMap {
    pub percent: PerSensor<f64>,
    pub pc_total: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no presses recorded")]
pub struct NoPresses;

impl ContributionMap {
    /// Build a map directly from percentages (what-if analysis and fixtures).
    pub fn from_percentages(percent: PerSensor<f64>) -> Self {
        ContributionMap { percent, pc_total: 0 }
    }

    pub fn get(&self, sensor: SensorId) -> f64 {
        self.percent[sensor]
    }

    pub fn sum_of(&self, sensors: &[SensorId]) -> f64 {
        sensors.iter().map(|&s| self.percent[s]).sum()
    }
}

/// `C_sensor = PC_sensor / PC_total × 100`.
pub fn sensor_contributions(stats: &PressStats) -> Result<ContributionMap, NoPresses> {
    if stats.total == 0 {
        return Err(NoPresses);
    }
    let total = f64::from(stats.total);
    // Multiply first so whole-percent shares (e.g. 1 of 5) come out exact.
    let percent = stats.counts.map(|_, &count| f64::from(count) * 100.0 / total);
    Ok(ContributionMap {
        percent,
        pc_total: stats.total,
    })
}
