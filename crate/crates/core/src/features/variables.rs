//! Per-record variable constructions.

use std::collections::HashMap;
use std::hash::Hash;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};

use crate::data::{
    AgeBracket, DestScope, FlightRecord, Purpose, Schooling, SurveyResponse, TerminalHourStats,
    WeatherObservation,
};
use crate::{Error, Result};

/// How a group of 0–5 ratings is rescaled to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleKind {
    /// mean / 5
    Satisfaction,
    /// (5 − mean) / 5
    Price,
}

pub fn rescale_unit(ratings: &[u8], kind: RescaleKind) -> Result<f64> {
    if ratings.is_empty() {
        return Err(Error::Data("rescale_unit needs at least one rating".into()));
    }
    if let Some(bad) = ratings.iter().find(|&&r| r > 5) {
        return Err(Error::Data(format!("rating {bad} outside 0..=5")));
    }
    let mean = ratings.iter().map(|&r| r as f64).sum::<f64>() / ratings.len() as f64;
    Ok(match kind {
        RescaleKind::Satisfaction => mean / 5.0,
        RescaleKind::Price => (5.0 - mean) / 5.0,
    })
}

/// 1 when every listed rating is 4 or 5.
pub fn top_two_box(ratings: &[u8]) -> f64 {
    if !ratings.is_empty() && ratings.iter().all(|&r| r >= 4) {
        1.0
    } else {
        0.0
    }
}

/// Individual dissatisfaction 5 − rating.
pub fn dissatisfaction(rating: u8) -> f64 {
    5.0 - rating.min(5) as f64
}

/// Dissatisfaction ratio against peers (self excluded). An empty peer set
/// falls back to the self-inclusive mean; a zero mean yields 0.
pub fn dissat_ratio(own: u8, peers: &[u8]) -> f64 {
    let d = dissatisfaction(own);
    let mean = if peers.is_empty() {
        d
    } else {
        peers.iter().map(|&r| dissatisfaction(r)).sum::<f64>() / peers.len() as f64
    };
    if mean == 0.0 {
        0.0
    } else {
        d / mean
    }
}

/// Peer denominator for DISSAT ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeerMode {
    #[default]
    LeaveOneOut,
    IncludeSelf,
}

/// Which interviews count as peers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeerGrouping {
    /// Same clock hour of day within the same calendar month.
    #[default]
    HourOfMonth,
    /// Same clock hour on the same date.
    ClockHour,
}

impl PeerGrouping {
    pub fn key(self, t: NaiveDateTime) -> (i32, u32, u32, u32) {
        match self {
            PeerGrouping::HourOfMonth => (t.year(), t.month(), 0, t.hour()),
            PeerGrouping::ClockHour => (t.year(), t.month(), t.day(), t.hour()),
        }
    }
}

/// Two-pass DISSAT ratios for a whole sample: group sums first, then
/// per-record ratios against the (leave-one-out) group mean.
pub fn dissat_ratios<K: Hash + Eq + Clone>(ratings: &[u8], keys: &[K], mode: PeerMode) -> Vec<f64> {
    let mut agg: HashMap<K, (f64, usize)> = HashMap::new();
    for (r, k) in ratings.iter().zip(keys) {
        let e = agg.entry(k.clone()).or_insert((0.0, 0));
        e.0 += dissatisfaction(*r);
        e.1 += 1;
    }
    ratings
        .iter()
        .zip(keys)
        .map(|(r, k)| {
            let d = dissatisfaction(*r);
            let (sum, n) = agg[k];
            let mean = match mode {
                PeerMode::LeaveOneOut if n > 1 => (sum - d) / (n - 1) as f64,
                _ => sum / n as f64,
            };
            if mean <= 0.0 {
                0.0
            } else {
                d / mean
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalMetrics {
    pub termden: f64,
    pub termdis: f64,
    pub busyday: f64,
    pub busyhour: f64,
}

pub fn terminal_metrics(s: &TerminalHourStats) -> TerminalMetrics {
    TerminalMetrics {
        termden: 10.0 * s.pax_hour as f64 / s.terminal_area_m2,
        termdis: ratio(s.pax_delayed_hour, s.pax_hour),
        busyday: s.pax_day as f64 / 10_000.0,
        busyhour: s.pax_hour as f64 / 1_000.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunwayMetrics {
    pub runwaycong: f64,
    pub runwaydis: f64,
    pub cascad_dep: f64,
    pub cascad_arr: f64,
}

pub fn runway_metrics(s: &TerminalHourStats) -> Result<RunwayMetrics> {
    if s.declared_capacity == 0 {
        return Err(Error::Data("declared runway capacity must be positive".into()));
    }
    Ok(RunwayMetrics {
        runwaycong: s.movements_hour as f64 / s.declared_capacity as f64,
        runwaydis: ratio(s.disrupted_hour, s.movements_hour),
        cascad_dep: ratio(s.dep_delayed_3h, s.dep_total_3h),
        cascad_arr: ratio(s.arr_delayed_3h, s.arr_total_3h),
    })
}

fn ratio(num: u32, den: u32) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Adverse-weather alert: low ceiling, low visibility, strong gusts,
/// thunderstorm or hail. Absent observation means no alert.
pub fn weather_flags(obs: Option<&WeatherObservation>) -> bool {
    let Some(o) = obs else { return false };
    let gust_limit = if o.wet_runway { 27.0 } else { 33.0 };
    o.ceiling_ft.is_some_and(|c| c < 600.0)
        || o.visibility_m.is_some_and(|v| v < 1500.0)
        || o.gust_kt.is_some_and(|g| g > gust_limit)
        || o.thunderstorm
        || o.hail
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generation {
    Silent,
    Boomer,
    X,
    Millennial,
    Z,
}

/// Generation from bracket midpoint age and interview year:
/// Silent ≤1945, Boomer 1946–64, X 1965–76, Millennial 1977–95, Z 1996–2015.
pub fn generation(bracket: AgeBracket, interview_year: i32) -> Result<Generation> {
    let birth = interview_year as f64 - bracket.midpoint();
    Ok(if birth < 1946.0 {
        Generation::Silent
    } else if birth < 1965.0 {
        Generation::Boomer
    } else if birth < 1977.0 {
        Generation::X
    } else if birth < 1996.0 {
        Generation::Millennial
    } else if birth < 2016.0 {
        Generation::Z
    } else {
        return Err(Error::Classification(format!(
            "age bracket {bracket} in {interview_year} implies birth year {birth}, after 2015"
        )));
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchoolingGroup {
    Elementary,
    Middle,
    High,
    College,
}

pub fn schooling_group(s: Schooling) -> SchoolingGroup {
    match s {
        Schooling::Illiterate | Schooling::Elementary => SchoolingGroup::Elementary,
        Schooling::Middle => SchoolingGroup::Middle,
        Schooling::High => SchoolingGroup::High,
        Schooling::CollegeUnfinished | Schooling::College => SchoolingGroup::College,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlierType {
    FirstTime,
    Experienced,
    Frequent,
}

pub fn flier_type(boardings_12m: u32) -> FlierType {
    match boardings_12m {
        0 => FlierType::FirstTime,
        1 | 2 => FlierType::Experienced,
        _ => FlierType::Frequent,
    }
}

/// Respondent profile categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RespondentClass {
    pub generation: Generation,
    pub schooling: SchoolingGroup,
    pub flier: FlierType,
    pub purpose: Purpose,
}

impl RespondentClass {
    /// Named 0/1 dummies, reference levels included.
    pub fn dummies(&self) -> [(&'static str, f64); 15] {
        let b = |c: bool| if c { 1.0 } else { 0.0 };
        [
            ("GENSILEN", b(self.generation == Generation::Silent)),
            ("GENBOOM", b(self.generation == Generation::Boomer)),
            ("GENX", b(self.generation == Generation::X)),
            ("GENMILLEN", b(self.generation == Generation::Millennial)),
            ("GENZ", b(self.generation == Generation::Z)),
            ("SCHLELEM", b(self.schooling == SchoolingGroup::Elementary)),
            ("SCHLMIDD", b(self.schooling == SchoolingGroup::Middle)),
            ("SCHLHIGH", b(self.schooling == SchoolingGroup::High)),
            ("SCHLCOLL", b(self.schooling == SchoolingGroup::College)),
            ("FIRSTTFLIER", b(self.flier == FlierType::FirstTime)),
            ("EXPERCDFLIER", b(self.flier == FlierType::Experienced)),
            ("FREQFLIER", b(self.flier == FlierType::Frequent)),
            ("LSRFLIER", b(self.purpose == Purpose::Leisure)),
            ("BSNFLIER", b(self.purpose == Purpose::Business)),
            ("OTHFLIER", b(self.purpose == Purpose::Other)),
        ]
    }
}

pub fn classify_respondent(s: &SurveyResponse) -> Result<RespondentClass> {
    Ok(RespondentClass {
        generation: generation(s.age_bracket, s.interview_at.year())?,
        schooling: schooling_group(s.schooling),
        flier: flier_type(s.boardings_12m),
        purpose: s.purpose,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Board {
    Not,
    Call,
    Now,
}

/// Minutes before departure at which boarding is taken to have started.
pub fn boarding_lead_min(scope: DestScope) -> f64 {
    match scope {
        DestScope::Domestic => 40.0,
        DestScope::International => 60.0,
    }
}

/// Boarding phase at interview time. `not_threshold_min` is the sample
/// quantile of time to flight separating NOT from CALL.
pub fn board_window(
    interview_at: NaiveDateTime,
    sched_dep: NaiveDateTime,
    scope: DestScope,
    not_threshold_min: f64,
) -> Board {
    let t = (sched_dep - interview_at).num_seconds() as f64 / 60.0;
    if t <= boarding_lead_min(scope) {
        Board::Now
    } else if t >= not_threshold_min {
        Board::Not
    } else {
        Board::Call
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayOutcome {
    pub del: f64,
    pub deldur: f64,
    pub deldur2: f64,
}

pub fn delay_outcomes(f: &FlightRecord, threshold_min: u32) -> Result<DelayOutcome> {
    let minutes = f.delay_minutes().ok_or_else(|| {
        Error::Contract(format!(
            "canceled flight {} on {} reached delay construction",
            f.flight_no, f.date
        ))
    })?;
    let delayed = minutes > threshold_min as f64;
    let deldur = if delayed { (minutes / 60.0).max(0.0) } else { 0.0 };
    Ok(DelayOutcome {
        del: if delayed { 1.0 } else { 0.0 },
        deldur,
        deldur2: deldur * deldur,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PandemicDummies {
    pub pre: f64,
    pub early: f64,
    pub later: f64,
}

/// 2019 → PRE; Mar–Dec 2020 → EARLY; 2021 → LATER; anything else (2018,
/// Jan–Feb 2020) is the reference.
pub fn pandemic_dummies(date: NaiveDate) -> PandemicDummies {
    let (y, m) = (date.year(), date.month());
    PandemicDummies {
        pre: (y == 2019) as u8 as f64,
        early: (y == 2020 && m >= 3) as u8 as f64,
        later: (y == 2021) as u8 as f64,
    }
}

/// Departure between 23:00 and 05:59.
pub fn is_redeye(sched_dep: NaiveDateTime) -> bool {
    let h = sched_dep.hour();
    h >= 23 || h < 6
}

/// Interval bins of time to flight given ascending interior edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeToFlightBins {
    pub edges: Vec<f64>,
}

impl Default for TimeToFlightBins {
    fn default() -> Self {
        Self { edges: vec![20.0, 40.0, 60.0, 80.0, 100.0] }
    }
}

impl TimeToFlightBins {
    pub fn validate(&self) -> Result<()> {
        if self.edges.windows(2).any(|w| w[0] >= w[1]) || self.edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("time-to-flight edges must be finite and strictly increasing".into()));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin(&self, minutes: f64) -> usize {
        self.edges.partition_point(|&e| e <= minutes)
    }

    pub fn label(&self, bin: usize) -> String {
        let fmt = |v: f64| format!("{v}");
        match (bin.checked_sub(1).map(|i| self.edges[i]), self.edges.get(bin)) {
            (None, Some(hi)) => format!("TIMETOFLT (<{})", fmt(*hi)),
            (Some(lo), None) => format!("TIMETOFLT (>={})", fmt(lo)),
            (Some(lo), Some(hi)) => format!("TIMETOFLT [{},{})", fmt(lo), fmt(*hi)),
            (None, None) => "TIMETOFLT (all)".to_string(),
        }
    }
}

/// Linear-interpolation sample quantile (the common "type 7" definition).
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Station, Terminal};
    use proptest::prelude::*;

    fn at(h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2019, 5, 3).unwrap().and_hms_opt(h, m, 0).unwrap()
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(rescale_unit(&[5, 5], RescaleKind::Satisfaction).unwrap(), 1.0);
        assert_eq!(rescale_unit(&[0], RescaleKind::Satisfaction).unwrap(), 0.0);
        assert!((rescale_unit(&[3, 4], RescaleKind::Price).unwrap() - 0.3).abs() < 1e-15);
        assert!(rescale_unit(&[], RescaleKind::Price).is_err());
        assert_eq!(top_two_box(&[4, 5]), 1.0);
        assert_eq!(top_two_box(&[4, 3]), 0.0);
    }

    #[test]
    fn dissat_examples() {
        assert_eq!(dissat_ratio(3, &[3, 3, 3]), 1.0);
        assert_eq!(dissat_ratio(5, &[1, 2]), 0.0);
        assert_eq!(dissat_ratio(1, &[4, 4, 4]), 4.0);
        assert_eq!(dissat_ratio(2, &[]), 1.0);
        assert_eq!(dissat_ratio(3, &[5, 5]), 0.0);
        let r = dissat_ratios(&[1, 4, 4, 4], &[0, 0, 0, 0], PeerMode::LeaveOneOut);
        assert_eq!(r[0], 4.0);
        let r = dissat_ratios(&[3, 3], &[0, 0], PeerMode::IncludeSelf);
        assert_eq!(r, vec![1.0, 1.0]);
        let r = dissat_ratios(&[2], &[7], PeerMode::LeaveOneOut);
        assert_eq!(r, vec![1.0]);
    }

    fn stats() -> TerminalHourStats {
        TerminalHourStats {
            terminal: Terminal::T2,
            hour: at(10, 0),
            pax_hour: 3000,
            pax_day: 30000,
            pax_delayed_hour: 3000,
            dep_total_3h: 80,
            dep_delayed_3h: 12,
            arr_total_3h: 0,
            arr_delayed_3h: 0,
            movements_hour: 66,
            declared_capacity: 57,
            disrupted_hour: 0,
            terminal_area_m2: 60000.0,
        }
    }

    #[test]
    fn terminal_and_runway_examples() {
        let mut s = stats();
        let m = terminal_metrics(&s);
        assert_eq!(m.termden, 0.5);
        assert_eq!(m.termdis, 1.0);
        assert_eq!(m.busyday, 3.0);
        s.pax_hour = 0;
        s.pax_delayed_hour = 0;
        let m = terminal_metrics(&s);
        assert_eq!((m.termdis, m.busyhour), (0.0, 0.0));
        let r = runway_metrics(&stats()).unwrap();
        assert!((r.runwaycong - 66.0 / 57.0).abs() < 1e-15);
        assert!((r.runwaycong - 1.158).abs() < 1e-3);
        assert_eq!(r.cascad_dep, 0.15);
        assert_eq!(r.cascad_arr, 0.0);
        let mut bad = stats();
        bad.declared_capacity = 0;
        assert!(runway_metrics(&bad).is_err());
    }

    #[test]
    fn weather_thresholds() {
        let mut o = WeatherObservation::nominal(Station::Origin, at(10, 0));
        assert!(!weather_flags(Some(&o)));
        assert!(!weather_flags(None));
        o.ceiling_ft = Some(550.0);
        assert!(weather_flags(Some(&o)));
        o.ceiling_ft = Some(5000.0);
        o.gust_kt = Some(30.0);
        assert!(!weather_flags(Some(&o)));
        o.wet_runway = true;
        assert!(weather_flags(Some(&o)));
        let mut o = WeatherObservation::nominal(Station::Origin, at(10, 0));
        o.visibility_m = Some(1400.0);
        assert!(weather_flags(Some(&o)));
        o.visibility_m = None;
        o.hail = true;
        assert!(weather_flags(Some(&o)));
    }

    #[test]
    fn generation_table() {
        assert_eq!(generation(AgeBracket::From45To54, 2019).unwrap(), Generation::X);
        assert_eq!(generation(AgeBracket::UpTo21, 2019).unwrap(), Generation::Z);
        assert_eq!(generation(AgeBracket::From22To25, 2019).unwrap(), Generation::Millennial);
        assert_eq!(generation(AgeBracket::From35To44, 2019).unwrap(), Generation::Millennial);
        assert_eq!(generation(AgeBracket::From55To64, 2019).unwrap(), Generation::Boomer);
        assert_eq!(generation(AgeBracket::From65To75, 2018).unwrap(), Generation::Boomer);
        assert_eq!(generation(AgeBracket::From76, 2018).unwrap(), Generation::Silent);
        assert!(matches!(generation(AgeBracket::UpTo21, 2040), Err(Error::Classification(_))));
    }

    #[test]
    fn respondent_dummies() {
        assert_eq!(flier_type(0), FlierType::FirstTime);
        assert_eq!(flier_type(2), FlierType::Experienced);
        assert_eq!(flier_type(3), FlierType::Frequent);
        assert_eq!(schooling_group(Schooling::Illiterate), SchoolingGroup::Elementary);
        let c = RespondentClass {
            generation: Generation::X,
            schooling: SchoolingGroup::College,
            flier: FlierType::FirstTime,
            purpose: Purpose::Leisure,
        };
        let d: HashMap<_, _> = c.dummies().into_iter().collect();
        assert_eq!(d["SCHLELEM"] + d["SCHLMIDD"] + d["SCHLHIGH"], 0.0);
        assert_eq!(d["FIRSTTFLIER"], 1.0);
    }

    #[test]
    fn boarding_examples() {
        let dep = at(12, 0);
        assert_eq!(board_window(at(11, 25), dep, DestScope::Domestic, 90.0), Board::Now);
        assert_eq!(board_window(at(11, 5), dep, DestScope::International, 90.0), Board::Now);
        assert_eq!(board_window(at(11, 10), dep, DestScope::Domestic, 90.0), Board::Call);
        assert_eq!(board_window(at(10, 0), dep, DestScope::Domestic, 90.0), Board::Not);
        assert_eq!(board_window(at(12, 30), dep, DestScope::Domestic, 90.0), Board::Now);
    }

    #[test]
    fn delay_examples() {
        use crate::data::join::fixtures::{at as jat, flight};
        let d = delay_outcomes(&flight("X", jat(3, 10, 0), Some(14)), 15).unwrap();
        assert_eq!((d.del, d.deldur), (0.0, 0.0));
        let d = delay_outcomes(&flight("X", jat(3, 10, 0), Some(90)), 15).unwrap();
        assert_eq!((d.del, d.deldur, d.deldur2), (1.0, 1.5, 2.25));
        let d = delay_outcomes(&flight("X", jat(3, 10, 0), Some(20)), 30).unwrap();
        assert_eq!(d.del, 0.0);
        assert!(matches!(
            delay_outcomes(&flight("X", jat(3, 10, 0), None), 15),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn pandemic_examples() {
        let d = |y, m, dd| pandemic_dummies(NaiveDate::from_ymd_opt(y, m, dd).unwrap());
        assert_eq!(d(2018, 6, 1), PandemicDummies { pre: 0.0, early: 0.0, later: 0.0 });
        assert_eq!(d(2020, 3, 15).early, 1.0);
        assert_eq!(d(2020, 2, 15), PandemicDummies { pre: 0.0, early: 0.0, later: 0.0 });
        assert_eq!(d(2021, 7, 1).later, 1.0);
        assert_eq!(d(2019, 1, 1).pre, 1.0);
    }

    #[test]
    fn bins_and_quantile() {
        let b = TimeToFlightBins::default();
        assert_eq!(b.n_bins(), 6);
        assert_eq!(b.bin(-10.0), 0);
        assert_eq!(b.bin(20.0), 1);
        assert_eq!(b.bin(119.0), 5);
        assert_eq!(b.label(0), "TIMETOFLT (<20)");
        assert_eq!(b.label(2), "TIMETOFLT [40,60)");
        assert_eq!(b.label(5), "TIMETOFLT (>=100)");
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.75), Some(3.25));
        assert!(is_redeye(at(23, 30)) && is_redeye(at(5, 59)) && !is_redeye(at(6, 0)));
    }

    proptest! {
        #[test]
        fn dissat_nonnegative_and_homogeneous(r in 0u8..=5, n in 1usize..30) {
            let ratings = vec![r; n];
            let keys = vec![0u8; n];
            for v in dissat_ratios(&ratings, &keys, PeerMode::LeaveOneOut) {
                let want = if r == 5 { 0.0 } else { 1.0 };
                prop_assert_eq!(v, want);
            }
        }

        #[test]
        fn dissat_finite(ratings in prop::collection::vec(0u8..=5, 1..50), groups in 1u8..5) {
            let keys: Vec<u8> = (0..ratings.len()).map(|i| i as u8 % groups).collect();
            for v in dissat_ratios(&ratings, &keys, PeerMode::LeaveOneOut) {
                prop_assert!(v.is_finite() && v >= 0.0);
            }
        }

        #[test]
        fn delay_thresholds_nest(delay in -30i64..400) {
            use crate::data::join::fixtures::{at as jat, flight};
            let f = flight("X", jat(3, 10, 0), Some(delay));
            let d15 = delay_outcomes(&f, 15).unwrap();
            let d30 = delay_outcomes(&f, 30).unwrap();
            prop_assert!(d30.del <= d15.del);
            prop_assert_eq!(d15.deldur2, d15.deldur * d15.deldur);
            if d15.del == 0.0 { prop_assert_eq!(d15.deldur, 0.0); }
        }
    }
}
