//! CSV readers and writers for the four source tables.
//!
//! Timestamps use `YYYY-MM-DD HH:MM`, dates `YYYY-MM-DD`, booleans
//! `true`/`false` (also `1`/`0`). Optional weather fields are blank or `-`.

use std::collections::HashSet;
use std::fs::File;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};

use super::records::*;
use crate::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M";
pub const DATE_FORMAT: &str = "%Y-%m-%d";

pub fn survey_columns() -> Vec<String> {
    let mut cols: Vec<String> = ["respondent_id", "interview_at", "terminal", "flight_no", "global_rating"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(Question::ALL.iter().map(|q| q.column()));
    cols.extend(
        ["age_bracket", "schooling", "boardings_12m", "purpose", "dest_scope", "is_connecting"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols
}

pub const FLIGHT_COLUMNS: [&str; 13] = [
    "flight_no",
    "date",
    "sched_dep",
    "actual_dep",
    "airline",
    "destination",
    "distance_mi",
    "seats",
    "pax",
    "connecting_pax",
    "cargo_kg",
    "jetbridge",
    "terminal",
];

pub const WEATHER_COLUMNS: [&str; 8] = [
    "station",
    "at",
    "ceiling_ft",
    "visibility_m",
    "gust_kt",
    "wet_runway",
    "thunderstorm",
    "hail",
];

pub const TERMINAL_HOUR_COLUMNS: [&str; 13] = [
    "terminal",
    "hour",
    "pax_hour",
    "pax_day",
    "pax_delayed_hour",
    "dep_total_3h",
    "dep_delayed_3h",
    "arr_total_3h",
    "arr_delayed_3h",
    "movements_hour",
    "declared_capacity",
    "disrupted_hour",
    "terminal_area_m2",
];

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn open_reader(path: &Path, expected: &[String]) -> Result<(csv::Reader<File>, String)> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let file = file_name(path);
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = rdr.headers()?.clone();
    for (i, want) in expected.iter().enumerate() {
        match header.get(i) {
            Some(got) if got.trim() == want => {}
            got => {
                return Err(Error::Schema {
                    file,
                    row: 0,
                    column: want.clone(),
                    message: format!("expected header `{want}`, found `{}`", got.unwrap_or("")),
                })
            }
        }
    }
    if header.len() != expected.len() {
        return Err(Error::Schema {
            file,
            row: 0,
            column: header.get(expected.len()).unwrap_or("").to_string(),
            message: format!("expected {} columns, found {}", expected.len(), header.len()),
        });
    }
    Ok((rdr, file))
}

/// One data row with its 1-based row number for diagnostics.
struct Row<'a> {
    file: &'a str,
    row: usize,
    rec: &'a csv::StringRecord,
    columns: &'a [String],
}

impl Row<'_> {
    fn schema(&self, col: usize, message: impl Into<String>) -> Error {
        Error::Schema {
            file: self.file.to_string(),
            row: self.row,
            column: self.columns[col].clone(),
            message: message.into(),
        }
    }

    fn raw(&self, col: usize) -> &str {
        self.rec.get(col).map(str::trim).unwrap_or("")
    }

    fn text(&self, col: usize) -> Result<String> {
        let v = self.raw(col);
        if v.is_empty() {
            return Err(self.schema(col, "empty value"));
        }
        Ok(v.to_string())
    }

    fn number<T: std::str::FromStr>(&self, col: usize) -> Result<T> {
        self.raw(col)
            .parse()
            .map_err(|_| self.schema(col, format!("cannot parse `{}`", self.raw(col))))
    }

    fn real(&self, col: usize) -> Result<f64> {
        let v: f64 = self.number(col)?;
        if !v.is_finite() {
            return Err(self.schema(col, "non-finite value"));
        }
        Ok(v)
    }

    fn optional_real(&self, col: usize) -> Result<Option<f64>> {
        match self.raw(col) {
            "" | "-" => Ok(None),
            _ => self.real(col).map(Some),
        }
    }

    fn boolean(&self, col: usize) -> Result<bool> {
        match self.raw(col) {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            other => Err(self.schema(col, format!("expected true/false, found `{other}`"))),
        }
    }

    fn timestamp(&self, col: usize) -> Result<NaiveDateTime> {
        NaiveDateTime::parse_from_str(self.raw(col), TIMESTAMP_FORMAT)
            .map_err(|_| self.schema(col, format!("expected YYYY-MM-DD HH:MM, found `{}`", self.raw(col))))
    }

    fn optional_timestamp(&self, col: usize) -> Result<Option<NaiveDateTime>> {
        match self.raw(col) {
            "" | "-" => Ok(None),
            _ => self.timestamp(col).map(Some),
        }
    }

    fn date(&self, col: usize) -> Result<NaiveDate> {
        NaiveDate::parse_from_str(self.raw(col), DATE_FORMAT)
            .map_err(|_| self.schema(col, format!("expected YYYY-MM-DD, found `{}`", self.raw(col))))
    }

    fn label<T: Label>(&self, col: usize) -> Result<T> {
        let v = self.raw(col);
        T::parse_label(v).ok_or_else(|| Error::UnknownLabel {
            file: self.file.to_string(),
            row: self.row,
            field: self.columns[col].clone(),
            value: v.to_string(),
            valid: T::valid_labels(),
        })
    }
}

fn read_rows<T>(
    path: &Path,
    columns: &[String],
    mut parse: impl FnMut(&Row<'_>) -> Result<T>,
) -> Result<Vec<T>> {
    let (mut rdr, file) = open_reader(path, columns)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = Row { file: &file, row: i + 1, rec: &rec, columns };
        out.push(parse(&row)?);
    }
    Ok(out)
}

fn owned(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Read `surveys.csv`; blank domain ratings are stored as 0.
pub fn load_surveys(path: &Path) -> Result<Vec<SurveyResponse>> {
    let columns = survey_columns();
    let nq = Question::ALL.len();
    read_rows(path, &columns, |r| {
        let global: u8 = r.number(4)?;
        let global_rating =
            GlobalRating::new(global).ok_or_else(|| r.schema(4, format!("rating {global} outside 1..=10")))?;
        let mut domain = [0u8; 14];
        for (k, slot) in domain.iter_mut().enumerate() {
            let col = 5 + k;
            *slot = match r.raw(col) {
                "" => 0,
                _ => {
                    let v: u8 = r.number(col)?;
                    if v > 5 {
                        return Err(r.schema(col, format!("rating {v} outside 0..=5")));
                    }
                    v
                }
            };
        }
        let b = 5 + nq;
        Ok(SurveyResponse {
            respondent_id: RespondentId(r.text(0)?),
            interview_at: r.timestamp(1)?,
            terminal: r.label(2)?,
            flight_no: FlightNo(r.text(3)?),
            global_rating,
            domain_ratings: DomainRatings::new(domain).expect("validated"),
            age_bracket: r.label(b)?,
            schooling: r.label(b + 1)?,
            boardings_12m: r.number(b + 2)?,
            purpose: r.label(b + 3)?,
            dest_scope: r.label(b + 4)?,
            is_connecting: r.boolean(b + 5)?,
        })
    })
}

/// Read `flights.csv`; rejects duplicate (flight_no, date) keys.
pub fn load_flights(path: &Path) -> Result<Vec<FlightRecord>> {
    let columns = owned(&FLIGHT_COLUMNS);
    let flights = read_rows(path, &columns, |r| {
        let distance_mi = r.real(6)?;
        if distance_mi <= 0.0 {
            return Err(r.schema(6, "distance must be positive"));
        }
        let seats: u32 = r.number(7)?;
        if seats == 0 {
            return Err(r.schema(7, "seats must be positive"));
        }
        let pax: u32 = r.number(8)?;
        let connecting_pax: u32 = r.number(9)?;
        if connecting_pax > pax {
            return Err(r.schema(9, format!("connecting_pax {connecting_pax} exceeds pax {pax}")));
        }
        let cargo_kg = r.real(10)?;
        if cargo_kg < 0.0 {
            return Err(r.schema(10, "cargo must be non-negative"));
        }
        Ok(FlightRecord {
            flight_no: FlightNo(r.text(0)?),
            date: r.date(1)?,
            sched_dep: r.timestamp(2)?,
            actual_dep: r.optional_timestamp(3)?,
            airline: r.text(4)?,
            destination: r.text(5)?,
            distance_mi,
            seats,
            pax,
            connecting_pax,
            cargo_kg,
            jetbridge: r.boolean(11)?,
            terminal: r.label(12)?,
        })
    })?;
    let mut seen = HashSet::new();
    for f in &flights {
        if !seen.insert((f.flight_no.clone(), f.date)) {
            return Err(Error::DuplicateKey {
                flight_no: f.flight_no.0.clone(),
                date: f.date.format(DATE_FORMAT).to_string(),
            });
        }
    }
    Ok(flights)
}

/// Read `weather.csv`; `-` or blank marks a missing sensor.
pub fn load_weather(path: &Path) -> Result<Vec<WeatherObservation>> {
    let columns = owned(&WEATHER_COLUMNS);
    read_rows(path, &columns, |r| {
        let positive = |col: usize| -> Result<Option<f64>> {
            match r.optional_real(col)? {
                Some(v) if v <= 0.0 => Err(r.schema(col, "must be positive")),
                v => Ok(v),
            }
        };
        let gust_kt = r.optional_real(4)?;
        if gust_kt.is_some_and(|g| g < 0.0) {
            return Err(r.schema(4, "gust must be non-negative"));
        }
        Ok(WeatherObservation {
            station: Station::parse(&r.text(0)?),
            at: r.timestamp(1)?,
            ceiling_ft: positive(2)?,
            visibility_m: positive(3)?,
            gust_kt,
            wet_runway: r.boolean(5)?,
            thunderstorm: r.boolean(6)?,
            hail: r.boolean(7)?,
        })
    })
}

/// Read `terminal_hours.csv`.
pub fn load_terminal_hours(path: &Path) -> Result<Vec<TerminalHourStats>> {
    let columns = owned(&TERMINAL_HOUR_COLUMNS);
    read_rows(path, &columns, |r| {
        let s = TerminalHourStats {
            terminal: r.label(0)?,
            hour: r.timestamp(1)?,
            pax_hour: r.number(2)?,
            pax_day: r.number(3)?,
            pax_delayed_hour: r.number(4)?,
            dep_total_3h: r.number(5)?,
            dep_delayed_3h: r.number(6)?,
            arr_total_3h: r.number(7)?,
            arr_delayed_3h: r.number(8)?,
            movements_hour: r.number(9)?,
            declared_capacity: r.number(10)?,
            disrupted_hour: r.number(11)?,
            terminal_area_m2: r.real(12)?,
        };
        if s.pax_delayed_hour > s.pax_hour {
            return Err(r.schema(4, "pax_delayed_hour exceeds pax_hour"));
        }
        if s.dep_delayed_3h > s.dep_total_3h {
            return Err(r.schema(6, "dep_delayed_3h exceeds dep_total_3h"));
        }
        if s.arr_delayed_3h > s.arr_total_3h {
            return Err(r.schema(8, "arr_delayed_3h exceeds arr_total_3h"));
        }
        if s.declared_capacity == 0 {
            return Err(r.schema(10, "declared capacity must be positive"));
        }
        if s.terminal_area_m2 <= 0.0 {
            return Err(r.schema(12, "terminal area must be positive"));
        }
        Ok(s)
    })
}

fn ts(t: &NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".to_string())
}

fn writer(path: &Path, header: &[String]) -> Result<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

pub fn write_surveys(path: &Path, rows: &[SurveyResponse]) -> Result<()> {
    let mut w = writer(path, &survey_columns())?;
    for s in rows {
        let mut rec = vec![
            s.respondent_id.0.clone(),
            ts(&s.interview_at),
            s.terminal.to_string(),
            s.flight_no.0.clone(),
            s.global_rating.get().to_string(),
        ];
        rec.extend(Question::ALL.iter().map(|&q| match s.domain_ratings.get(q) {
            0 => String::new(),
            v => v.to_string(),
        }));
        rec.extend([
            s.age_bracket.to_string(),
            s.schooling.to_string(),
            s.boardings_12m.to_string(),
            s.purpose.to_string(),
            s.dest_scope.to_string(),
            s.is_connecting.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_flights(path: &Path, rows: &[FlightRecord]) -> Result<()> {
    let mut w = writer(path, &owned(&FLIGHT_COLUMNS))?;
    for f in rows {
        w.write_record([
            f.flight_no.0.clone(),
            f.date.format(DATE_FORMAT).to_string(),
            ts(&f.sched_dep),
            f.actual_dep.as_ref().map(ts).unwrap_or_default(),
            f.airline.clone(),
            f.destination.clone(),
            f.distance_mi.to_string(),
            f.seats.to_string(),
            f.pax.to_string(),
            f.connecting_pax.to_string(),
            f.cargo_kg.to_string(),
            f.jetbridge.to_string(),
            f.terminal.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_weather(path: &Path, rows: &[WeatherObservation]) -> Result<()> {
    let mut w = writer(path, &owned(&WEATHER_COLUMNS))?;
    for o in rows {
        w.write_record([
            o.station.to_string(),
            ts(&o.at),
            opt(o.ceiling_ft),
            opt(o.visibility_m),
            opt(o.gust_kt),
            o.wet_runway.to_string(),
            o.thunderstorm.to_string(),
            o.hail.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_terminal_hours(path: &Path, rows: &[TerminalHourStats]) -> Result<()> {
    let mut w = writer(path, &owned(&TERMINAL_HOUR_COLUMNS))?;
    for s in rows {
        w.write_record([
            s.terminal.to_string(),
            ts(&s.hour),
            s.pax_hour.to_string(),
            s.pax_day.to_string(),
            s.pax_delayed_hour.to_string(),
            s.dep_total_3h.to_string(),
            s.dep_delayed_3h.to_string(),
            s.arr_total_3h.to_string(),
            s.arr_delayed_3h.to_string(),
            s.movements_hour.to_string(),
            s.declared_capacity.to_string(),
            s.disrupted_hour.to_string(),
            s.terminal_area_m2.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
