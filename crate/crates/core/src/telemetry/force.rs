//! Force bands and the feedback colors derived from them.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest value a 10-bit force channel can report.
pub const RAW_MAX: u16 = 1023;

/// Default upper bound of the graded force region, in arb units.
pub const DEFAULT_QUARTET_BOUND: u16 = 600;

/// One of four equal-width force bands below the quartet bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ForceQuartet {
    /// Very light.
    Q1,
    /// Light.
    Q2,
    /// Medium.
    Q3,
    /// Hard.
    Q4,
}

impl ForceQuartet {
    pub const ALL: [ForceQuartet; 4] = [
        ForceQuartet::Q1,
        ForceQuartet::Q2,
        ForceQuartet::Q3,
        ForceQuartet::Q4,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ForceQuartet::Q1 => "very light",
            ForceQuartet::Q2 => "light",
            ForceQuartet::Q3 => "medium",
            ForceQuartet::Q4 => "hard",
        }
    }

    pub fn color(self) -> FeedbackColor {
        quartet_to_color(self)
    }
}

impl fmt::Display for ForceQuartet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ForceQuartet::Q1 => "Q1",
            ForceQuartet::Q2 => "Q2",
            ForceQuartet::Q3 => "Q3",
            ForceQuartet::Q4 => "Q4",
        };
        f.write_str(s)
    }
}

/// Partition of `[0, bound]` into four half-open bands; anything at or above
/// the last boundary (including readings past `bound`) is Q4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuartetScale {
    bound: u16,
}

impl Default for QuartetScale {
    fn default() -> Self {
        QuartetScale {
            bound: DEFAULT_QUARTET_BOUND,
        }
    }
}

impl QuartetScale {
    /// `bound` must be at least 4 so every band is non-empty.
    pub fn new(bound: u16) -> Option<QuartetScale> {
        (bound >= 4).then_some(QuartetScale { bound })
    }

    pub fn bound(self) -> u16 {
        self.bound
    }

    /// Band width in arb units. Fractional when the bound is not a multiple of 4.
    pub fn width(self) -> f64 {
        f64::from(self.bound) / 4.0
    }

    pub fn classify(self, raw: u16) -> ForceQuartet {
        // raw * 4 < k * bound  <=>  raw < k * width, without rounding.
        let scaled = u32::from(raw) * 4;
        let bound = u32::from(self.bound);
        if scaled < bound {
            ForceQuartet::Q1
        } else if scaled < 2 * bound {
            ForceQuartet::Q2
        } else if scaled < 3 * bound {
            ForceQuartet::Q3
        } else {
            ForceQuartet::Q4
        }
    }

    /// Inclusive lower edge of a band, rounded up to whole arb units.
    pub fn lower_edge(self, q: ForceQuartet) -> u16 {
        let k = q as u32;
        ((k * u32::from(self.bound)).div_ceil(4)) as u16
    }
}

/// Classify a raw reading against the default 600-unit bound.
pub fn classify_force_level(raw: u16) -> ForceQuartet {
    QuartetScale::default().classify(raw)
}

/// Color shown on the feedback panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackColor {
    Green,
    Amber,
    Red,
}

pub fn quartet_to_color(q: ForceQuartet) -> FeedbackColor {
    match q {
        ForceQuartet::Q1 | ForceQuartet::Q2 => FeedbackColor::Green,
        ForceQuartet::Q3 => FeedbackColor::Amber,
        ForceQuartet::Q4 => FeedbackColor::Red,
    }
}

impl fmt::Display for FeedbackColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeedbackColor::Green => "green",
            FeedbackColor::Amber => "amber",
            FeedbackColor::Red => "red",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundaries_follow_150_unit_bins() {
        assert_eq!(classify_force_level(0), ForceQuartet::Q1);
        assert_eq!(classify_force_level(149), ForceQuartet::Q1);
        assert_eq!(classify_force_level(150), ForceQuartet::Q2);
        assert_eq!(classify_force_level(299), ForceQuartet::Q2);
        assert_eq!(classify_force_level(300), ForceQuartet::Q3);
        assert_eq!(classify_force_level(449), ForceQuartet::Q3);
        assert_eq!(classify_force_level(450), ForceQuartet::Q4);
        assert_eq!(classify_force_level(599), ForceQuartet::Q4);
        assert_eq!(classify_force_level(1023), ForceQuartet::Q4);
    }

    #[test]
    fn color_mapping() {
        assert_eq!(quartet_to_color(ForceQuartet::Q1), FeedbackColor::Green);
        assert_eq!(quartet_to_color(ForceQuartet::Q2), FeedbackColor::Green);
        assert_eq!(quartet_to_color(ForceQuartet::Q3), FeedbackColor::Amber);
        assert_eq!(quartet_to_color(ForceQuartet::Q4), FeedbackColor::Red);
    }

    #[test]
    fn scale_with_non_multiple_bound() {
        let scale = QuartetScale::new(650).unwrap();
        // width 162.5
        assert_eq!(scale.classify(162), ForceQuartet::Q1);
        assert_eq!(scale.classify(163), ForceQuartet::Q2);
        assert_eq!(scale.lower_edge(ForceQuartet::Q2), 163);
        assert_eq!(scale.lower_edge(ForceQuartet::Q4), 488);
        assert!(QuartetScale::new(3).is_none());
    }

    proptest! {
        #[test]
        fn classification_is_monotone(a in 0u16..=RAW_MAX, b in 0u16..=RAW_MAX) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify_force_level(lo) <= classify_force_level(hi));
            prop_assert!(
                quartet_to_color(classify_force_level(lo)) <= quartet_to_color(classify_force_level(hi))
            );
        }

        #[test]
        fn lower_edge_is_first_member(bound in 4u16..=1023, q in 0usize..4) {
            let scale = QuartetScale::new(bound).unwrap();
            let q = ForceQuartet::ALL[q];
            let edge = scale.lower_edge(q);
            prop_assert_eq!(scale.classify(edge), q);
            if edge > 0 {
                prop_assert!(scale.classify(edge - 1) < q);
            }
        }
    }
}
