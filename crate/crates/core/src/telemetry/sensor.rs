//! The twelve contact sites on the palpating hand.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Number of force channels on the glove.
pub const SENSOR_COUNT: usize = 12;

/// One force-sensor site. The discriminant doubles as the channel index on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SensorId {
    /// Index fingertip.
    T1,
    /// Middle fingertip.
    T2,
    /// Ring fingertip.
    T3,
    /// Radial border of the index finger, distal.
    S1,
    /// Radial border of the index finger, middle.
    S2,
    /// Radial border of the index finger, proximal.
    S3,
    /// Index finger base.
    B1,
    /// Middle finger base.
    B2,
    /// Ring finger base.
    B3,
    /// Thenar eminence, distal.
    E1,
    /// Thenar eminence, proximal.
    E2,
    /// Hypothenar eminence.
    E3,
}

impl SensorId {
    pub const ALL: [SensorId; SENSOR_COUNT] = [
        SensorId::T1,
        SensorId::T2,
        SensorId::T3,
        SensorId::S1,
        SensorId::S2,
        SensorId::S3,
        SensorId::B1,
        SensorId::B2,
        SensorId::B3,
        SensorId::E1,
        SensorId::E2,
        SensorId::E3,
    ];

    /// Sites that should never touch the abdomen.
    pub const ERROR_SET: [SensorId; 3] = [SensorId::E1, SensorId::E2, SensorId::E3];

    /// Sites the liver-edge technique should concentrate on.
    pub const LIVER_FOCUS: [SensorId; 5] = [
        SensorId::S1,
        SensorId::S2,
        SensorId::S3,
        SensorId::T1,
        SensorId::B1,
    ];

    pub const FINGERTIPS: [SensorId; 3] = [SensorId::T1, SensorId::T2, SensorId::T3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<SensorId> {
        Self::ALL.get(index).copied()
    }

    pub fn is_error(self) -> bool {
        matches!(self, SensorId::E1 | SensorId::E2 | SensorId::E3)
    }

    pub fn is_permitted(self) -> bool {
        !self.is_error()
    }

    pub fn is_fingertip(self) -> bool {
        matches!(self, SensorId::T1 | SensorId::T2 | SensorId::T3)
    }

    pub fn is_liver_focus(self) -> bool {
        Self::LIVER_FOCUS.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorId::T1 => "T1",
            SensorId::T2 => "T2",
            SensorId::T3 => "T3",
            SensorId::S1 => "S1",
            SensorId::S2 => "S2",
            SensorId::S3 => "S3",
            SensorId::B1 => "B1",
            SensorId::B2 => "B2",
            SensorId::B3 => "B3",
            SensorId::E1 => "E1",
            SensorId::E2 => "E2",
            SensorId::E3 => "E3",
        }
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown sensor id {0:?}")]
pub struct UnknownSensor(pub String);

impl FromStr for SensorId {
    type Err = UnknownSensor;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorId::ALL
            .iter()
            .copied()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownSensor(s.to_string()))
    }
}

/// A value for each of the twelve sensors, indexable by [`SensorId`].
///
/// Serializes as a JSON object keyed by sensor name in channel order, so
/// reports stay readable and byte-stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PerSensor<T>(pub [T; SENSOR_COUNT]);

impl<T> PerSensor<T> {
    pub fn from_fn(mut f: impl FnMut(SensorId) -> T) -> Self {
        PerSensor(std::array::from_fn(|i| f(SensorId::ALL[i])))
    }

    pub fn iter(&self) -> impl Iterator<Item = (SensorId, &T)> {
        SensorId::ALL.iter().copied().zip(self.0.iter())
    }

    pub fn map<U>(&self, mut f: impl FnMut(SensorId, &T) -> U) -> PerSensor<U> {
        PerSensor::from_fn(|id| f(id, &self[id]))
    }

    pub fn values(&self) -> &[T; SENSOR_COUNT] {
        &self.0
    }
}

impl<T> Index<SensorId> for PerSensor<T> {
    type Output = T;

    fn index(&self, id: SensorId) -> &T {
        &self.0[id.index()]
    }
}

impl<T> IndexMut<SensorId> for PerSensor<T> {
    fn index_mut(&mut self, id: SensorId) -> &mut T {
        &mut self.0[id.index()]
    }
}

impl<T: Serialize> Serialize for PerSensor<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(SENSOR_COUNT))?;
        for (id, value) in self.iter() {
            map.serialize_entry(id.name(), value)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for PerSensor<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PerSensorVisitor<T>(std::marker::PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for PerSensorVisitor<T> {
            type Value = PerSensor<T>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object with one entry per sensor T1..E3")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut slots: [Option<T>; SENSOR_COUNT] = Default::default();
                while let Some(key) = access.next_key::<String>()? {
                    let id: SensorId = key.parse().map_err(de::Error::custom)?;
                    if slots[id.index()].is_some() {
                        return Err(de::Error::custom(format!("duplicate sensor {id}")));
                    }
                    slots[id.index()] = Some(access.next_value()?);
                }
                let mut missing = Vec::new();
                for (i, slot) in slots.iter().enumerate() {
                    if slot.is_none() {
                        missing.push(SensorId::ALL[i].name());
                    }
                }
                if !missing.is_empty() {
                    return Err(de::Error::custom(format!("missing sensors {}", missing.join(","))));
                }
                Ok(PerSensor(slots.map(|s| s.expect("checked above"))))
            }
        }

        deserializer.deserialize_map(PerSensorVisitor(std::marker::PhantomData))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_sites_partitioned_into_error_and_permitted() {
        assert_eq!(SensorId::ALL.len(), 12);
        let errors: Vec<_> = SensorId::ALL.iter().filter(|s| s.is_error()).collect();
        let permitted: Vec<_> = SensorId::ALL.iter().filter(|s| s.is_permitted()).collect();
        assert_eq!(errors, [&SensorId::E1, &SensorId::E2, &SensorId::E3]);
        assert_eq!(permitted.len(), 9);
        assert!(SensorId::LIVER_FOCUS.iter().all(|s| s.is_permitted()));
    }

    #[test]
    fn channel_index_roundtrips() {
        for (i, id) in SensorId::ALL.iter().enumerate() {
            assert_eq!(id.index(), i);
            assert_eq!(SensorId::from_index(i), Some(*id));
            assert_eq!(id.name().parse::<SensorId>().unwrap(), *id);
        }
        assert_eq!(SensorId::from_index(12), None);
        assert!("X9".parse::<SensorId>().is_err());
    }

    #[test]
    fn per_sensor_serializes_as_ordered_map() {
        let p = PerSensor::from_fn(|id| id.index() as u32);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.starts_with(r#"{"T1":0,"T2":1,"T3":2,"S1":3"#));
        let back: PerSensor<u32> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);

        let missing = r#"{"T1":0}"#;
        assert!(serde_json::from_str::<PerSensor<u32>>(missing).is_err());
    }
}
