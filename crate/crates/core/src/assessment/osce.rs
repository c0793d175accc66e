use std::fmt;

use serde::{Deserialize, Serialize};

use super::MAX_TOTAL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OsceRating {
    Fail,
    Borderline,
    Pass,
    Good,
    Excellent,
}

impl fmt::Display for OsceRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OsceRating::Fail => "Fail",
            OsceRating::Borderline => "Borderline",
            OsceRating::Pass => "Pass",
            OsceRating::Good => "Good",
            OsceRating::Excellent => "Excellent",
        })
    }
}

/// Lower bound (inclusive) of each rating above Fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OsceThresholds {
    pub borderline: f64,
    pub pass: f64,
    pub good: f64,
    pub excellent: f64,
}

impl Default for OsceThresholds {
    fn default() -> Self {
        OsceThresholds {
            borderline: 15.0,
            pass: 18.0,
            good: 22.0,
            excellent: 26.0,
        }
    }
}

impl OsceThresholds {
    pub fn validate(&self) -> Result<(), String> {
        let t = [self.borderline, self.pass, self.good, self.excellent];
        if t.iter().any(|v| !v.is_finite()) {
            return Err("OSCE thresholds must be finite".into());
        }
        if t[0] < 0.0 || t[3] > MAX_TOTAL || t.windows(2).any(|w| w[0] > w[1]) {
            return Err(format!(
                "OSCE thresholds must be nondecreasing within [0, {MAX_TOTAL}], got {t:?}"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("total {0} outside [0, 30]")]
pub struct TotalOutOfRange(pub f64);

pub fn osce_rating(total: f64, thresholds: &OsceThresholds) -> Result<OsceRating, TotalOutOfRange> {
    if !(0.0..=MAX_TOTAL).contains(&total) {
        return Err(TotalOutOfRange(total));
    }
    Ok(if total >= thresholds.excellent {
        OsceRating::Excellent
    } else if total >= thresholds.good {
        OsceRating::Good
    } else if total >= thresholds.pass {
        OsceRating::Pass
    } else if total >= thresholds.borderline {
        OsceRating::Borderline
    } else {
        OsceRating::Fail
    })
}
