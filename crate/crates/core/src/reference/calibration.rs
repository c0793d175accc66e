use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::telemetry::{PerSensor, SensorId};

pub const CALIBRATION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("{sensor}: {message}")]
    InvalidKnots { sensor: String, message: String },
    #[error("calibration schema version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no calibration for sensor {0}")]
pub struct NoTableForSensor(pub SensorId);

/// Piecewise-linear map from arb units to Newtons for one sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotCurve {
    knots: Vec<(f64, f64)>,
}

impl KnotCurve {
    /// `(0, 0)` is inserted when absent. Knots must be strictly increasing in
    /// arb and nondecreasing in Newtons.
    pub fn new(knots: &[[f64; 2]]) -> Result<Self, String> {
        let mut pts: Vec<(f64, f64)> = knots.iter().map(|k| (k[0], k[1])).collect();
        if pts.iter().any(|(a, n)| !a.is_finite() || !n.is_finite()) {
            return Err("knots must be finite".into());
        }
        if pts.iter().any(|&(a, _)| a < 0.0) {
            return Err("knot arb values must be nonnegative".into());
        }
        match pts.first() {
            Some(&(a, n)) if a == 0.0 && n != 0.0 => {
                return Err(format!("knot at arb 0 must map to 0 N, got {n}"));
            }
            Some(&(0.0, _)) => {}
            _ => pts.insert(0, (0.0, 0.0)),
        }
        if pts.len() < 2 {
            return Err("need at least one knot above arb 0".into());
        }
        for w in pts.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(format!("arb values must increase strictly ({} then {})", w[0].0, w[1].0));
            }
            if w[1].1 < w[0].1 {
                return Err(format!("Newtons must not decrease ({} then {})", w[0].1, w[1].1));
            }
        }
        Ok(KnotCurve { knots: pts })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Interpolates between knots; above the last knot the final segment is extended.
    pub fn eval(&self, raw: f64) -> f64 {
        let k = &self.knots;
        let raw = raw.max(0.0);
        let i = k.partition_point(|&(a, _)| a <= raw).clamp(1, k.len() - 1);
        let ((a0, n0), (a1, n1)) = (k[i - 1], k[i]);
        n0 + (raw - a0) * (n1 - n0) / (a1 - a0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationDoc {
    schema_version: u32,
    /// Curve for every sensor without its own entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    sensors: BTreeMap<SensorId, Vec<[f64; 2]>>,
}

/// Per-sensor arb→Newton curves. Sensors without a curve stay uncalibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CalibrationDoc", into = "CalibrationDoc")]
pub struct CalibrationTable {
    default: Option<KnotCurve>,
    sensors: BTreeMap<SensorId, KnotCurve>,
}

impl CalibrationTable {
    /// The same curve for all twelve sensors.
    pub fn uniform(knots: &[[f64; 2]]) -> Result<Self, CalibrationError> {
        let curve = KnotCurve::new(knots).map_err(|message| CalibrationError::InvalidKnots {
            sensor: "default".into(),
            message,
        })?;
        Ok(CalibrationTable {
            default: Some(curve),
            sensors: BTreeMap::new(),
        })
    }

    pub fn with_sensor(mut self, sensor: SensorId, knots: &[[f64; 2]]) -> Result<Self, CalibrationError> {
        let curve = KnotCurve::new(knots).map_err(|message| CalibrationError::InvalidKnots {
            sensor: sensor.to_string(),
            message,
        })?;
        self.sensors.insert(sensor, curve);
        Ok(self)
    }

    pub fn empty() -> Self {
        CalibrationTable {
            default: None,
            sensors: BTreeMap::new(),
        }
    }

    pub fn curve(&self, sensor: SensorId) -> Option<&KnotCurve> {
        self.sensors.get(&sensor).or(self.default.as_ref())
    }

    pub fn covers(&self, sensor: SensorId) -> bool {
        self.curve(sensor).is_some()
    }
}

impl TryFrom<CalibrationDoc> for CalibrationTable {
    type Error = CalibrationError;

    fn try_from(doc: CalibrationDoc) -> Result<Self, Self::Error> {
        if doc.schema_version != CALIBRATION_SCHEMA_VERSION {
            return Err(CalibrationError::SchemaVersion {
                found: doc.schema_version,
                expected: CALIBRATION_SCHEMA_VERSION,
            });
        }
        let mut table = match &doc.default {
            Some(k) => CalibrationTable::uniform(k)?,
            None => CalibrationTable::empty(),
        };
        for (sensor, knots) in &doc.sensors {
            table = table.with_sensor(*sensor, knots)?;
        }
        Ok(table)
    }
}

impl From<CalibrationTable> for CalibrationDoc {
    fn from(t: CalibrationTable) -> Self {
        let dump = |c: &KnotCurve| c.knots.iter().map(|&(a, n)| [a, n]).collect();
        CalibrationDoc {
            schema_version: CALIBRATION_SCHEMA_VERSION,
            default: t.default.as_ref().map(dump),
            sensors: t.sensors.iter().map(|(s, c)| (*s, dump(c))).collect(),
        }
    }
}

/// Raw arb reading to Newtons on `sensor`'s curve.
pub fn calibrate(raw: f64, table: &CalibrationTable, sensor: SensorId) -> Result<f64, NoTableForSensor> {
    table.curve(sensor).map(|c| c.eval(raw)).ok_or(NoTableForSensor(sensor))
}

/// Per-sensor Newton values where a curve exists.
pub fn calibrate_all(raw: &PerSensor<f64>, table: &CalibrationTable) -> PerSensor<Option<f64>> {
    raw.map(|s, &v| calibrate(v, table, s).ok())
}
