//! Feature-construction options.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::variables::{PeerGrouping, PeerMode, TimeToFlightBins};
use crate::{Error, Result};

/// Covariate blocks that can be switched on or off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CovariateGroup {
    /// The twenty respondent, flight, terminal and amenity covariates.
    Roster,
    /// The delay encoding (see [`DelayEncoding`]).
    Delay,
    /// The seven DISSAT ratios.
    Dissat,
    Termdis,
    Pandemic,
    TimeToFlight,
    Destination,
    Airline,
    Date,
}

impl CovariateGroup {
    pub const ALL: [CovariateGroup; 9] = [
        CovariateGroup::Roster,
        CovariateGroup::Delay,
        CovariateGroup::Dissat,
        CovariateGroup::Termdis,
        CovariateGroup::Pandemic,
        CovariateGroup::TimeToFlight,
        CovariateGroup::Destination,
        CovariateGroup::Airline,
        CovariateGroup::Date,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CovariateGroup::Roster => "roster",
            CovariateGroup::Delay => "delay",
            CovariateGroup::Dissat => "dissat",
            CovariateGroup::Termdis => "termdis",
            CovariateGroup::Pandemic => "pandemic",
            CovariateGroup::TimeToFlight => "timetoflt",
            CovariateGroup::Destination => "dest",
            CovariateGroup::Airline => "airl",
            CovariateGroup::Date => "date",
        }
    }

    /// Blocks always available to the selection stage as penalized controls.
    pub fn is_penalized(self) -> bool {
        !matches!(self, CovariateGroup::Roster | CovariateGroup::Delay)
    }
}

impl fmt::Display for CovariateGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CovariateGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown covariate group `{s}`")))
    }
}

/// How flight delay enters the satisfaction equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DelayEncoding {
    /// DEL
    Dummy,
    /// DELDUR, DELDUR2
    Duration,
    /// DEL × BOARD (NOT/CALL/NOW)
    ByBoarding,
    /// DEL × FIRSTTFLIER/EXPERCDFLIER/FREQFLIER
    ByFlier,
    /// DEL × FOOD/SHOPS/WIFI (4/5 RATING)
    ByAmenity,
    /// DELDUR and DELDUR2 × LSRFLIER/BSNFLIER
    DurationByPurpose,
}

impl DelayEncoding {
    pub fn name(self) -> &'static str {
        match self {
            DelayEncoding::Dummy => "dummy",
            DelayEncoding::Duration => "duration",
            DelayEncoding::ByBoarding => "by_boarding",
            DelayEncoding::ByFlier => "by_flier",
            DelayEncoding::ByAmenity => "by_amenity",
            DelayEncoding::DurationByPurpose => "duration_by_purpose",
        }
    }
}

impl FromStr for DelayEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            DelayEncoding::Dummy,
            DelayEncoding::Duration,
            DelayEncoding::ByBoarding,
            DelayEncoding::ByFlier,
            DelayEncoding::ByAmenity,
            DelayEncoding::DurationByPurpose,
        ]
        .into_iter()
        .find(|e| e.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown delay encoding `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    /// Minutes of departure delay defining DEL (15 or 30).
    pub delay_threshold_min: u32,
    /// Sample quantile of time to flight separating BOARD (NOT) from CALL.
    pub board_quantile: f64,
    pub include_groups: BTreeSet<CovariateGroup>,
    pub delay_encoding: DelayEncoding,
    /// Reference labels. DEST/AIRL/DATE entries override the default
    /// (lexicographically first level); the others are descriptive.
    pub reference_levels: BTreeMap<String, String>,
    pub dissat_mode: PeerMode,
    pub dissat_grouping: PeerGrouping,
    pub time_to_flight: TimeToFlightBins,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        let reference_levels = [
            ("generation", "GENX"),
            ("schooling", "SCHLCOLL"),
            ("flier", "EXPERCDFLIER"),
            ("terminal", "T2"),
            ("year", "2018"),
            ("purpose", "business/other"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Self {
            delay_threshold_min: 15,
            board_quantile: 0.75,
            include_groups: CovariateGroup::ALL.into_iter().collect(),
            delay_encoding: DelayEncoding::Dummy,
            reference_levels,
            dissat_mode: PeerMode::LeaveOneOut,
            dissat_grouping: PeerGrouping::HourOfMonth,
            time_to_flight: TimeToFlightBins::default(),
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if ![15, 30].contains(&self.delay_threshold_min) {
            return Err(Error::Config(format!(
                "delay_threshold_min must be 15 or 30, got {}",
                self.delay_threshold_min
            )));
        }
        if !(self.board_quantile > 0.0 && self.board_quantile < 1.0) {
            return Err(Error::Config(format!(
                "board_quantile must lie in (0, 1), got {}",
                self.board_quantile
            )));
        }
        self.time_to_flight.validate()
    }

    pub fn with_groups(mut self, groups: &[CovariateGroup]) -> Self {
        self.include_groups = groups.iter().copied().collect();
        self
    }

    pub fn includes(&self, g: CovariateGroup) -> bool {
        self.include_groups.contains(&g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(FeatureSpec::default().validate().is_ok());
        let s = FeatureSpec { delay_threshold_min: 20, ..Default::default() };
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let s = FeatureSpec { board_quantile: 1.0, ..Default::default() };
        assert!(s.validate().is_err());
        let s = FeatureSpec { board_quantile: 0.5, ..Default::default() };
        assert!(s.validate().is_ok());
    }

    #[test]
    fn names_parse() {
        for g in CovariateGroup::ALL {
            assert_eq!(g.name().parse::<CovariateGroup>().unwrap(), g);
        }
        assert!("nope".parse::<CovariateGroup>().is_err());
        assert_eq!("by_boarding".parse::<DelayEncoding>().unwrap(), DelayEncoding::ByBoarding);
    }
}
