//! Anthropometric indexes used to group actor patients by body type.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyCategory {
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub gender: Gender,
    pub height_m: f64,
    pub weight_kg: f64,
    pub waist_cm: f64,
    pub hip_cm: f64,
    pub body_category: BodyCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HealthMetrics {
    pub bmi: f64,
    pub bai_percent: f64,
    pub whr: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field} must be strictly positive, got {value}")]
pub struct NonPositiveAnthropometric {
    pub field: &'static str,
    pub value: f64,
}

/// BMI (kg/m²), body adiposity index (hip / height^1.5 − 18) and waist-to-hip ratio.
pub fn compute_health_metrics(p: &PatientProfile) -> Result<HealthMetrics, NonPositiveAnthropometric> {
    for (field, value) in [
        ("height_m", p.height_m),
        ("weight_kg", p.weight_kg),
        ("waist_cm", p.waist_cm),
        ("hip_cm", p.hip_cm),
    ] {
        // also rejects NaN
        if value.is_nan() || value <= 0.0 {
            return Err(NonPositiveAnthropometric { field, value });
        }
    }
    Ok(HealthMetrics {
        bmi: p.weight_kg / (p.height_m * p.height_m),
        bai_percent: p.hip_cm / p.height_m.powf(1.5) - 18.0,
        whr: p.waist_cm / p.hip_cm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BmiCategory {
    Underweight,
    Healthy,
    Overweight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaiBand {
    Below,
    Healthy,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub bmi: BmiCategory,
    pub bai: BaiBand,
    pub whr_at_risk: bool,
}

pub fn classify_health_metrics(m: &HealthMetrics, gender: Gender) -> CategoryReport {
    let bmi = if m.bmi < 18.5 {
        BmiCategory::Underweight
    } else if m.bmi > 25.0 {
        BmiCategory::Overweight
    } else {
        BmiCategory::Healthy
    };
    // Healthy adiposity band for adults aged 20-39.
    let (bai_lo, bai_hi, whr_limit) = match gender {
        Gender::Female => (21.0, 33.0, 0.85),
        Gender::Male => (8.0, 21.0, 1.0),
    };
    let bai = if m.bai_percent < bai_lo {
        BaiBand::Below
    } else if m.bai_percent > bai_hi {
        BaiBand::Above
    } else {
        BaiBand::Healthy
    };
    CategoryReport {
        bmi,
        bai,
        whr_at_risk: m.whr > whr_limit,
    }
}
