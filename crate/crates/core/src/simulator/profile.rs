use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::telemetry::{ForceQuartet, PerSensor, SensorId, TaskKind, DEFAULT_QUARTET_BOUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    IdealSuperficial,
    IdealDeep,
    IdealLiver,
    Tutor1Deep,
    Tutor2Deep,
    Tutor3Deep,
    Tutor4Deep,
    ErrorHeavy,
    Custom,
}

impl Archetype {
    pub const BUILT_IN: [Archetype; 8] = [
        Archetype::IdealSuperficial,
        Archetype::IdealDeep,
        Archetype::IdealLiver,
        Archetype::Tutor1Deep,
        Archetype::Tutor2Deep,
        Archetype::Tutor3Deep,
        Archetype::Tutor4Deep,
        Archetype::ErrorHeavy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::IdealSuperficial => "ideal-superficial",
            Archetype::IdealDeep => "ideal-deep",
            Archetype::IdealLiver => "ideal-liver",
            Archetype::Tutor1Deep => "tutor1-deep",
            Archetype::Tutor2Deep => "tutor2-deep",
            Archetype::Tutor3Deep => "tutor3-deep",
            Archetype::Tutor4Deep => "tutor4-deep",
            Archetype::ErrorHeavy => "error-heavy",
            Archetype::Custom => "custom",
        }
    }

    /// The task this archetype was designed to perform.
    pub fn natural_task(self) -> Option<TaskKind> {
        match self {
            Archetype::IdealSuperficial => Some(TaskKind::Superficial),
            Archetype::IdealLiver => Some(TaskKind::Liver),
            Archetype::Custom => None,
            _ => Some(TaskKind::Deep),
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown archetype {0:?}")]
pub struct UnknownArchetype(pub String);

impl FromStr for Archetype {
    type Err = UnknownArchetype;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::BUILT_IN
            .into_iter()
            .chain([Archetype::Custom])
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| UnknownArchetype(s.to_string()))
    }
}

/// Everything the generator needs besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimProfile {
    pub archetype: Archetype,
    pub press_counts: PerSensor<u32>,
    /// Peak quartets, assigned to presses in rotation.
    pub quartets: Vec<ForceQuartet>,
    /// Press envelope length range in ms; both ends multiples of 40.
    pub press_ms: [u32; 2],
    /// Quiet time between presses in ms; both ends multiples of 20.
    pub gap_ms: [u32; 2],
    /// Fixed recording length; `None` ends shortly after the last press.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_ms: Option<u32>,
    #[serde(default = "default_bound")]
    pub quartet_bound: u16,
}

fn default_bound() -> u16 {
    DEFAULT_QUARTET_BOUND
}

fn counts(entries: &[(SensorId, u32)]) -> PerSensor<u32> {
    let mut c = PerSensor([0; 12]);
    for &(s, n) in entries {
        c[s] = n;
    }
    c
}

impl SimProfile {
    pub fn archetype(archetype: Archetype) -> SimProfile {
        use ForceQuartet::*;
        use SensorId::*;
        let base = |press_counts, quartets: &[ForceQuartet], press_ms, gap_ms| SimProfile {
            archetype,
            press_counts,
            quartets: quartets.to_vec(),
            press_ms,
            gap_ms,
            session_ms: None,
            quartet_bound: DEFAULT_QUARTET_BOUND,
        };
        match archetype {
            Archetype::IdealSuperficial => base(
                counts(&[(T1, 4), (T2, 4), (T3, 4), (S1, 1), (B2, 1)]),
                &[Q1, Q2],
                [400, 640],
                [200, 400],
            ),
            Archetype::IdealDeep => base(
                counts(&[(T1, 4), (T2, 4), (T3, 4), (B1, 1), (B3, 1)]),
                &[Q3, Q4],
                [600, 960],
                [240, 480],
            ),
            Archetype::IdealLiver => base(
                counts(&[(S1, 3), (S2, 3), (S3, 2), (T1, 3), (B1, 2), (T2, 1)]),
                &[Q2, Q3],
                [480, 800],
                [200, 400],
            ),
            // Few, long, hard presses.
            Archetype::Tutor1Deep => base(counts(&[(T1, 2), (T2, 2), (T3, 2)]), &[Q4], [1200, 1600], [400, 600]),
            // Many presses of moderately equal force.
            Archetype::Tutor2Deep => base(counts(&[(T1, 7), (T2, 7), (T3, 7)]), &[Q2, Q3], [400, 600], [200, 300]),
            Archetype::Tutor3Deep => base(counts(&[(T1, 4), (T2, 4), (T3, 4)]), &[Q3, Q4], [600, 880], [240, 400]),
            // Deep palpation close to superficial force levels.
            Archetype::Tutor4Deep => base(counts(&[(T1, 3), (T2, 3), (T3, 3)]), &[Q2], [520, 800], [240, 400]),
            Archetype::ErrorHeavy => base(
                counts(&[(T1, 3), (T2, 3), (T3, 3), (E1, 4), (E2, 3), (E3, 2)]),
                &[Q2, Q3],
                [400, 720],
                [200, 400],
            ),
            Archetype::Custom => base(counts(&[(T1, 1)]), &[Q2], [400, 600], [200, 300]),
        }
    }

    pub fn total_presses(&self) -> u32 {
        self.press_counts.values().iter().sum()
    }
}
