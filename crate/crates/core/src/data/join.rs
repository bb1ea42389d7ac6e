//! Survey-to-flight, weather and terminal-hour matching.

use std::collections::HashMap;
use std::fmt;

use chrono::{Duration, NaiveDateTime};
use rayon::prelude::*;

use super::records::*;
use crate::features::weather_flags;

/// Weather observations farther than this from the scheduled departure are ignored.
pub const WEATHER_WINDOW_MIN: i64 = 90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    NoFlight,
    NoTerminalHour,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::NoFlight => "no-flight",
            RejectReason::NoTerminalHour => "no-terminal-hour",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    pub respondent_id: RespondentId,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct JoinOutcome {
    pub joined: Vec<JoinedRecord>,
    pub rejects: Vec<Reject>,
}

/// Time-sorted observations per station.
pub struct WeatherIndex<'a> {
    by_station: HashMap<&'a Station, Vec<&'a WeatherObservation>>,
}

impl<'a> WeatherIndex<'a> {
    pub fn new(obs: &'a [WeatherObservation]) -> Self {
        let mut by_station: HashMap<&Station, Vec<&WeatherObservation>> = HashMap::new();
        for o in obs {
            by_station.entry(&o.station).or_default().push(o);
        }
        for v in by_station.values_mut() {
            v.sort_by_key(|o| o.at);
        }
        Self { by_station }
    }

    /// Nearest observation within the match window; ties go to the earlier one.
    pub fn nearest(&self, station: &Station, at: NaiveDateTime) -> Option<&'a WeatherObservation> {
        let list = self.by_station.get(station)?;
        let idx = list.partition_point(|o| o.at < at);
        let window = Duration::minutes(WEATHER_WINDOW_MIN);
        let mut best: Option<(&WeatherObservation, Duration)> = None;
        for i in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
            if let Some(o) = list.get(i) {
                let d = (o.at - at).abs();
                if d <= window && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((o, d));
                }
            }
        }
        best.map(|(o, _)| o)
    }
}

/// Flight with `sched_dep` nearest the interview; ties go to the earlier departure.
pub fn nearest_flight<'a>(candidates: &[&'a FlightRecord], at: NaiveDateTime) -> Option<&'a FlightRecord> {
    candidates
        .iter()
        .copied()
        .min_by_key(|f| ((f.sched_dep - at).abs(), f.sched_dep))
}

/// Match every survey to one flight, its terminal-hour aggregates and the
/// nearest origin/destination weather. Unmatched surveys go to `rejects`.
/// Output is sorted by respondent id.
pub fn join_records(
    surveys: &[SurveyResponse],
    flights: &[FlightRecord],
    weather: &[WeatherObservation],
    terminal_hours: &[TerminalHourStats],
) -> JoinOutcome {
    let mut by_flight: HashMap<&FlightNo, Vec<&FlightRecord>> = HashMap::new();
    for f in flights {
        by_flight.entry(&f.flight_no).or_default().push(f);
    }
    let by_hour: HashMap<(Terminal, NaiveDateTime), &TerminalHourStats> =
        terminal_hours.iter().map(|s| ((s.terminal, s.hour), s)).collect();
    let wx = WeatherIndex::new(weather);

    let mut results: Vec<Result<JoinedRecord, Reject>> = surveys
        .par_iter()
        .map(|s| {
            let reject = |reason| Reject { respondent_id: s.respondent_id.clone(), reason };
            let flight = by_flight
                .get(&s.flight_no)
                .and_then(|c| nearest_flight(c, s.interview_at))
                .ok_or_else(|| reject(RejectReason::NoFlight))?;
            let stats = by_hour
                .get(&(flight.terminal, truncate_to_hour(flight.sched_dep)))
                .ok_or_else(|| reject(RejectReason::NoTerminalHour))?;
            let dst = Station::Destination(flight.destination.clone());
            Ok(JoinedRecord {
                survey: s.clone(),
                flight: flight.clone(),
                weather_org: weather_flags(wx.nearest(&Station::Origin, flight.sched_dep)),
                weather_dst: weather_flags(wx.nearest(&dst, flight.sched_dep)),
                terminal_hour: **stats,
            })
        })
        .collect();
    results.sort_by(|a, b| {
        let key = |r: &Result<JoinedRecord, Reject>| match r {
            Ok(j) => j.survey.respondent_id.clone(),
            Err(e) => e.respondent_id.clone(),
        };
        key(a).cmp(&key(b))
    });
    let mut out = JoinOutcome::default();
    for r in results {
        match r {
            Ok(j) => out.joined.push(j),
            Err(e) => out.rejects.push(e),
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use chrono::NaiveDate;

    pub fn at(d: u32, h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2019, 5, d).unwrap().and_hms_opt(h, m, 0).unwrap()
    }

    pub fn survey(id: &str, flight: &str, t: NaiveDateTime) -> SurveyResponse {
        SurveyResponse {
            respondent_id: RespondentId(id.into()),
            interview_at: t,
            terminal: Terminal::T2,
            flight_no: FlightNo(flight.into()),
            global_rating: GlobalRating::new(8).unwrap(),
            domain_ratings: DomainRatings::uniform(4).unwrap(),
            age_bracket: AgeBracket::From45To54,
            schooling: Schooling::College,
            boardings_12m: 1,
            purpose: Purpose::Leisure,
            dest_scope: DestScope::Domestic,
            is_connecting: false,
        }
    }

    pub fn flight(no: &str, sched: NaiveDateTime, delay_min: Option<i64>) -> FlightRecord {
        FlightRecord {
            flight_no: FlightNo(no.into()),
            date: sched.date(),
            sched_dep: sched,
            actual_dep: delay_min.map(|d| sched + Duration::minutes(d)),
            airline: "G3".into(),
            destination: "SDU".into(),
            distance_mi: 220.0,
            seats: 180,
            pax: 150,
            connecting_pax: 5,
            cargo_kg: 800.0,
            jetbridge: true,
            terminal: Terminal::T2,
        }
    }

    pub fn hour(t: NaiveDateTime) -> TerminalHourStats {
        TerminalHourStats {
            terminal: Terminal::T2,
            hour: truncate_to_hour(t),
            pax_hour: 1500,
            pax_day: 25000,
            pax_delayed_hour: 200,
            dep_total_3h: 60,
            dep_delayed_3h: 9,
            arr_total_3h: 55,
            arr_delayed_3h: 5,
            movements_hour: 35,
            declared_capacity: 57,
            disrupted_hour: 4,
            terminal_area_m2: 60000.0,
        }
    }
}
