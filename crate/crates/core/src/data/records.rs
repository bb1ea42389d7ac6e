//! Record model for the survey, flight, weather and terminal-hour tables.

use std::fmt;

use chrono::{NaiveDate, NaiveDateTime, Timelike};

/// Enumerations serialized as fixed lowercase labels in the CSV tables.
pub trait Label: Sized + Copy + 'static {
    const ALL: &'static [Self];
    fn label(self) -> &'static str;

    fn parse_label(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|v| v.label() == s)
    }

    fn valid_labels() -> String {
        Self::ALL.iter().map(|v| v.label()).collect::<Vec<_>>().join(", ")
    }
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl Label for $name {
            const ALL: &'static [Self] = &[$($name::$variant),+];
            fn label(self) -> &'static str {
                match self { $($name::$variant => $label),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }
    };
}

label_enum!(
    /// Passenger terminal.
    Terminal { T1 => "T1", T2 => "T2", T3 => "T3" }
);

label_enum!(
    /// The eight questionnaire age brackets.
    AgeBracket {
        UpTo21 => "up_to_21",
        From22To25 => "22_25",
        From26To34 => "26_34",
        From35To44 => "35_44",
        From45To54 => "45_54",
        From55To64 => "55_64",
        From65To75 => "65_75",
        From76 => "76_plus",
    }
);

impl AgeBracket {
    /// Midpoint age used to resolve the generation of a bracket.
    pub fn midpoint(self) -> f64 {
        match self {
            AgeBracket::UpTo21 => 18.5,
            AgeBracket::From22To25 => 23.5,
            AgeBracket::From26To34 => 30.0,
            AgeBracket::From35To44 => 39.5,
            AgeBracket::From45To54 => 49.5,
            AgeBracket::From55To64 => 59.5,
            AgeBracket::From65To75 => 70.0,
            AgeBracket::From76 => 80.5,
        }
    }
}

label_enum!(
    /// The six questionnaire schooling levels.
    Schooling {
        Illiterate => "illiterate",
        Elementary => "elementary",
        Middle => "middle",
        High => "high",
        CollegeUnfinished => "college_unfinished",
        College => "college",
    }
);

label_enum!(
    /// Trip purpose.
    Purpose { Leisure => "leisure", Business => "business", Other => "other" }
);

label_enum!(
    /// Final destination scope.
    DestScope { Domestic => "domestic", International => "international" }
);

label_enum!(
    /// Domain-satisfaction questions rated on a 0–5 scale (0 = missing).
    Question {
        Curbside => "curbside",
        CheckinTime => "checkin_time",
        Wayfinding => "wayfinding",
        WalkDistance => "walk_distance",
        FlightInfo => "flight_info",
        SecurityTime => "security_time",
        AirlineStaff => "airline_staff",
        ShopQuality => "shop_quality",
        ShopVariety => "shop_variety",
        FoodQuality => "food_quality",
        FoodVariety => "food_variety",
        ShopPrice => "shop_price",
        FoodPrice => "food_price",
        Wifi => "wifi",
    }
);

impl Question {
    pub fn index(self) -> usize {
        self as usize
    }

    /// CSV column name.
    pub fn column(self) -> String {
        format!("q_{}", self.label())
    }
}

/// Opaque respondent identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RespondentId(pub String);

impl fmt::Display for RespondentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Flight number, the survey-to-flight join key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlightNo(pub String);

impl fmt::Display for FlightNo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Global airport rating on the 1–10 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct GlobalRating(u8);

impl GlobalRating {
    pub fn new(v: u8) -> Option<Self> {
        (1..=10).contains(&v).then_some(Self(v))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

/// Fourteen domain ratings, each 0–5 with 0 meaning not answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainRatings([u8; 14]);

impl DomainRatings {
    pub fn new(values: [u8; 14]) -> Option<Self> {
        values.iter().all(|&v| v <= 5).then_some(Self(values))
    }

    pub fn uniform(v: u8) -> Option<Self> {
        Self::new([v; 14])
    }

    pub fn get(&self, q: Question) -> u8 {
        self.0[q.index()]
    }

    pub fn set(&mut self, q: Question, v: u8) -> bool {
        if v > 5 {
            return false;
        }
        self.0[q.index()] = v;
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyResponse {
    pub respondent_id: RespondentId,
    pub interview_at: NaiveDateTime,
    pub terminal: Terminal,
    pub flight_no: FlightNo,
    pub global_rating: GlobalRating,
    pub domain_ratings: DomainRatings,
    pub age_bracket: AgeBracket,
    pub schooling: Schooling,
    pub boardings_12m: u32,
    pub purpose: Purpose,
    pub dest_scope: DestScope,
    pub is_connecting: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightRecord {
    pub flight_no: FlightNo,
    pub date: NaiveDate,
    pub sched_dep: NaiveDateTime,
    pub actual_dep: Option<NaiveDateTime>,
    pub airline: String,
    pub destination: String,
    pub distance_mi: f64,
    pub seats: u32,
    pub pax: u32,
    pub connecting_pax: u32,
    pub cargo_kg: f64,
    pub jetbridge: bool,
    pub terminal: Terminal,
}

impl FlightRecord {
    pub fn is_canceled(&self) -> bool {
        self.actual_dep.is_none()
    }

    /// More passengers than seats; admitted but capped in LOADFAC.
    pub fn is_overbooked(&self) -> bool {
        self.pax > self.seats
    }

    /// Departure delay in minutes (negative when early).
    pub fn delay_minutes(&self) -> Option<f64> {
        self.actual_dep
            .map(|a| (a - self.sched_dep).num_seconds() as f64 / 60.0)
    }
}

/// Weather station: the origin airport or a destination airport code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Station {
    Origin,
    Destination(String),
}

impl Station {
    pub fn parse(s: &str) -> Self {
        if s == "origin" {
            Station::Origin
        } else {
            Station::Destination(s.to_string())
        }
    }
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Station::Origin => f.write_str("origin"),
            Station::Destination(code) => f.write_str(code),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherObservation {
    pub station: Station,
    pub at: NaiveDateTime,
    pub ceiling_ft: Option<f64>,
    pub visibility_m: Option<f64>,
    pub gust_kt: Option<f64>,
    pub wet_runway: bool,
    pub thunderstorm: bool,
    pub hail: bool,
}

impl WeatherObservation {
    /// A nominal observation with every sensor reporting benign values.
    pub fn nominal(station: Station, at: NaiveDateTime) -> Self {
        Self {
            station,
            at,
            ceiling_ft: Some(5000.0),
            visibility_m: Some(10000.0),
            gust_kt: None,
            wet_runway: false,
            thunderstorm: false,
            hail: false,
        }
    }
}

/// Hourly terminal and runway traffic aggregates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalHourStats {
    pub terminal: Terminal,
    pub hour: NaiveDateTime,
    pub pax_hour: u32,
    pub pax_day: u32,
    pub pax_delayed_hour: u32,
    pub dep_total_3h: u32,
    pub dep_delayed_3h: u32,
    pub arr_total_3h: u32,
    pub arr_delayed_3h: u32,
    pub movements_hour: u32,
    pub declared_capacity: u32,
    pub disrupted_hour: u32,
    pub terminal_area_m2: f64,
}

/// Truncate a timestamp to the start of its clock hour.
pub fn truncate_to_hour(t: NaiveDateTime) -> NaiveDateTime {
    t.date()
        .and_hms_opt(t.hour(), 0, 0)
        .expect("valid hour")
}

/// A survey matched to its flight, weather and terminal-hour context.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedRecord {
    pub survey: SurveyResponse,
    pub flight: FlightRecord,
    pub weather_org: bool,
    pub weather_dst: bool,
    pub terminal_hour: TerminalHourStats,
}

impl JoinedRecord {
    /// Cluster label: terminal interacted with survey date.
    pub fn cluster_label(&self) -> String {
        format!(
            "{}:{}",
            self.survey.terminal,
            self.survey.interview_at.date().format("%Y-%m-%d")
        )
    }

    /// Minutes from interview to scheduled departure.
    pub fn minutes_to_flight(&self) -> f64 {
        (self.flight.sched_dep - self.survey.interview_at).num_seconds() as f64 / 60.0
    }
}
