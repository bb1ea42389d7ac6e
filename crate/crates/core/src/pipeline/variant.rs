//! Named model presets: the Table 2 and Table 4 columns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::features::{CovariateGroup as G, DelayEncoding, FeatureSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Col1Baseline,
    Col2Smote,
    Col3Del30,
    Col4Dissat,
    #[default]
    Col5Full,
    Col6Attribution,
    Col7Board75,
    Col8Board90,
    T4Interactions,
    T4Amenities,
    T4DurationPooled,
    T4Duration,
}

/// Roster, delay and the four fixed-effect style blocks.
const BASE: [G; 6] = [G::Roster, G::Delay, G::TimeToFlight, G::Destination, G::Airline, G::Date];
const T4: [G; 7] = [G::Roster, G::Delay, G::Dissat, G::TimeToFlight, G::Destination, G::Airline, G::Date];

impl Variant {
    pub const ALL: [Variant; 12] = [
        Variant::Col1Baseline,
        Variant::Col2Smote,
        Variant::Col3Del30,
        Variant::Col4Dissat,
        Variant::Col5Full,
        Variant::Col6Attribution,
        Variant::Col7Board75,
        Variant::Col8Board90,
        Variant::T4Interactions,
        Variant::T4Amenities,
        Variant::T4DurationPooled,
        Variant::T4Duration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Col1Baseline => "col1_baseline",
            Variant::Col2Smote => "col2_smote",
            Variant::Col3Del30 => "col3_del30",
            Variant::Col4Dissat => "col4_dissat",
            Variant::Col5Full => "col5_full",
            Variant::Col6Attribution => "col6_attribution",
            Variant::Col7Board75 => "col7_board75",
            Variant::Col8Board90 => "col8_board90",
            Variant::T4Interactions => "t4_interactions",
            Variant::T4Amenities => "t4_amenities",
            Variant::T4DurationPooled => "t4_duration_pooled",
            Variant::T4Duration => "t4_duration",
        }
    }

    /// Column header in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Col1Baseline => "(1)",
            Variant::Col2Smote => "(2)",
            Variant::Col3Del30 => "(3)",
            Variant::Col4Dissat => "(4)",
            Variant::Col5Full => "(5)",
            Variant::Col6Attribution => "(6)",
            Variant::Col7Board75 => "(7)",
            Variant::Col8Board90 => "(8)",
            Variant::T4Interactions => "T4 (1)",
            Variant::T4Amenities => "T4 (2)",
            Variant::T4DurationPooled => "T4 (3)",
            Variant::T4Duration => "T4 (4)",
        }
    }

    pub fn groups(self) -> &'static [G] {
        match self {
            Variant::Col1Baseline | Variant::Col2Smote | Variant::Col3Del30 => &BASE,
            Variant::Col4Dissat => &[G::Roster, G::Delay, G::Dissat, G::TimeToFlight, G::Destination, G::Airline, G::Date],
            Variant::Col5Full | Variant::Col6Attribution | Variant::Col7Board75 | Variant::Col8Board90 => &G::ALL,
            Variant::T4Interactions | Variant::T4Amenities | Variant::T4DurationPooled | Variant::T4Duration => &T4,
        }
    }

    pub fn delay_encoding(self) -> DelayEncoding {
        match self {
            Variant::Col7Board75 | Variant::Col8Board90 => DelayEncoding::ByBoarding,
            Variant::T4Interactions => DelayEncoding::ByFlier,
            Variant::T4Amenities => DelayEncoding::ByAmenity,
            Variant::T4DurationPooled => DelayEncoding::Duration,
            Variant::T4Duration => DelayEncoding::DurationByPurpose,
            _ => DelayEncoding::Dummy,
        }
    }

    pub fn delay_threshold_min(self) -> u32 {
        if self == Variant::Col3Del30 {
            30
        } else {
            15
        }
    }

    pub fn board_quantile(self) -> f64 {
        if self == Variant::Col8Board90 {
            0.90
        } else {
            0.75
        }
    }

    pub fn uses_smote(self) -> bool {
        self == Variant::Col2Smote
    }

    pub fn uses_attribution(self) -> bool {
        self == Variant::Col6Attribution
    }

    pub fn uses_duration(self) -> bool {
        matches!(self, Variant::T4DurationPooled | Variant::T4Duration)
    }

    pub fn feature_spec(self) -> FeatureSpec {
        FeatureSpec {
            delay_threshold_min: self.delay_threshold_min(),
            board_quantile: self.board_quantile(),
            delay_encoding: self.delay_encoding(),
            ..FeatureSpec::default()
        }
        .with_groups(self.groups())
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = Self::ALL.iter().map(|v| v.name()).collect();
            Error::Config(format!("unknown variant `{s}` (valid: {})", valid.join(", ")))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("col9".parse::<Variant>().is_err());
    }

    #[test]
    fn column_definitions() {
        assert_eq!(Variant::Col3Del30.feature_spec().delay_threshold_min, 30);
        assert_eq!(Variant::Col8Board90.feature_spec().board_quantile, 0.90);
        assert!(!Variant::Col1Baseline.feature_spec().includes(G::Dissat));
        assert!(Variant::Col4Dissat.feature_spec().includes(G::Dissat));
        assert!(!Variant::Col4Dissat.feature_spec().includes(G::Pandemic));
        assert_eq!(Variant::Col5Full.feature_spec(), FeatureSpec::default());
        assert_eq!(Variant::T4Duration.delay_encoding(), DelayEncoding::DurationByPurpose);
    }
}
