//! Sample-wide feature table and design-matrix assembly.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::design::DesignMatrix;
use super::spec::{CovariateGroup, DelayEncoding, FeatureSpec};
use super::variables::*;
use crate::data::{JoinedRecord, Question, Terminal};
use crate::{Error, Result};

/// The twenty Eq. (1) covariates, in column order.
pub const ROSTER: [&str; 20] = [
    "GENSILEN",
    "GENBOOM",
    "GENMILLEN",
    "GENZ",
    "SCHLELEM",
    "SCHLMIDD",
    "SCHLHIGH",
    "FIRSTTFLIER",
    "FREQFLIER",
    "LSRFLIER",
    "INTNLDEST",
    "REDEYE",
    "SMALLTERM",
    "INTNLTERM",
    "TERMDEN",
    "JETBRIDGE",
    "SHOPS",
    "FOOD",
    "EXPENSIVE",
    "WIFI",
];

/// DISSAT variables and their source questions.
pub const DISSAT: [(&str, Question); 7] = [
    ("DISSAT (CURBSID)", Question::Curbside),
    ("DISSAT (CHECKIN)", Question::CheckinTime),
    ("DISSAT (WAYFIND)", Question::Wayfinding),
    ("DISSAT (WALKDST)", Question::WalkDistance),
    ("DISSAT (FLTINFO)", Question::FlightInfo),
    ("DISSAT (SECINSP)", Question::SecurityTime),
    ("DISSAT (AIRLINE)", Question::AirlineStaff),
];

pub const PANDEMIC: [&str; 3] = ["PANDEMIC (PRE)", "PANDEMIC (EARLY)", "PANDEMIC (LATER)"];

/// Descriptive-statistics rows, alphabetical as in the report table.
pub const TABLE1_VARIABLES: [&str; 57] = [
    "AIRCSIZE",
    "APTSAT",
    "BOARD (CALL)",
    "BOARD (NOT)",
    "BOARD (NOW)",
    "BUSYDAY",
    "BUSYHOUR",
    "CARGO",
    "CASCAD (ARR)",
    "CASCAD (DEP)",
    "DEL",
    "DELDUR",
    "DISSAT (AIRLINE)",
    "DISSAT (CHECKIN)",
    "DISSAT (CURBSID)",
    "DISSAT (FLTINFO)",
    "DISSAT (SECINSP)",
    "DISSAT (WALKDST)",
    "DISSAT (WAYFIND)",
    "DISTANCE",
    "EXPENSIVE",
    "EXPERCDFLIER",
    "FIRSTTFLIER",
    "FOOD",
    "FOOD (4/5 RATING)",
    "FREQFLIER",
    "GENBOOM",
    "GENMILLEN",
    "GENSILEN",
    "GENX",
    "GENZ",
    "INTNLDEST",
    "INTNLTERM",
    "JETBRIDGE",
    "LOADFAC",
    "LSRFLIER",
    "PANDEMIC (EARLY)",
    "PANDEMIC (LATER)",
    "PANDEMIC (PRE)",
    "PRCONNECT",
    "REDEYE",
    "RUNWAYCONG",
    "RUNWAYDIS",
    "SCHLCOLL",
    "SCHLELEM",
    "SCHLHIGH",
    "SCHLMIDD",
    "SHOPS",
    "SHOPS (4/5 RATING)",
    "SMALLTERM",
    "TERMDEN",
    "TERMDIS",
    "WEATHER (DST)",
    "WEATHER (ORG)",
    "WIFI",
    "WIFI (4/5 RATING)",
    "BSNFLIER",
];

/// Every constructed variable for one sample, column-major.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    pub respondent_ids: Vec<String>,
    pub aptsat: Vec<i64>,
    pub cluster_id: Vec<String>,
    pub destination: Vec<String>,
    pub airline: Vec<String>,
    /// Scheduled flight date, `%Y-%m-%d`.
    pub date: Vec<String>,
    pub minutes_to_flight: Vec<f64>,
    pub ttf_bin: Vec<usize>,
    /// Time-to-flight quantile separating BOARD (NOT) from CALL.
    pub board_threshold_min: f64,
    pub spec: FeatureSpec,
    columns: BTreeMap<String, Vec<f64>>,
}

struct RowValues(Vec<(&'static str, f64)>);

fn row_values(r: &JoinedRecord, spec: &FeatureSpec, board_threshold: f64) -> Result<RowValues> {
    let s = &r.survey;
    let f = &r.flight;
    let b = |c: bool| if c { 1.0 } else { 0.0 };
    let q = |qq: Question| s.domain_ratings.get(qq);
    let mut v: Vec<(&'static str, f64)> = Vec::with_capacity(64);

    v.extend(classify_respondent(s)?.dummies());
    v.push(("APTSAT", s.global_rating.get() as f64));
    v.push(("INTNLDEST", b(s.dest_scope == crate::data::DestScope::International)));
    v.push(("REDEYE", b(is_redeye(f.sched_dep))));
    v.push(("SMALLTERM", b(s.terminal == Terminal::T1)));
    v.push(("INTNLTERM", b(s.terminal == Terminal::T3)));
    v.push(("JETBRIDGE", b(f.jetbridge)));

    let shops = [q(Question::ShopQuality), q(Question::ShopVariety)];
    let food = [q(Question::FoodQuality), q(Question::FoodVariety)];
    let prices = [q(Question::ShopPrice), q(Question::FoodPrice)];
    let wifi = [q(Question::Wifi)];
    v.push(("SHOPS", rescale_unit(&shops, RescaleKind::Satisfaction)?));
    v.push(("FOOD", rescale_unit(&food, RescaleKind::Satisfaction)?));
    v.push(("EXPENSIVE", rescale_unit(&prices, RescaleKind::Price)?));
    v.push(("WIFI", rescale_unit(&wifi, RescaleKind::Satisfaction)?));
    v.push(("SHOPS (4/5 RATING)", top_two_box(&shops)));
    v.push(("FOOD (4/5 RATING)", top_two_box(&food)));
    v.push(("WIFI (4/5 RATING)", top_two_box(&wifi)));

    let tm = terminal_metrics(&r.terminal_hour);
    let rm = runway_metrics(&r.terminal_hour)?;
    v.push(("TERMDEN", tm.termden));
    v.push(("TERMDIS", tm.termdis));
    v.push(("BUSYDAY", tm.busyday));
    v.push(("BUSYHOUR", tm.busyhour));
    v.push(("RUNWAYCONG", rm.runwaycong));
    v.push(("RUNWAYDIS", rm.runwaydis));
    v.push(("CASCAD (DEP)", rm.cascad_dep));
    v.push(("CASCAD (ARR)", rm.cascad_arr));

    let d = delay_outcomes(f, spec.delay_threshold_min)?;
    v.push(("DEL", d.del));
    v.push(("DELDUR", d.deldur));
    v.push(("DELDUR2", d.deldur2));

    let p = pandemic_dummies(s.interview_at.date());
    v.push(("PANDEMIC (PRE)", p.pre));
    v.push(("PANDEMIC (EARLY)", p.early));
    v.push(("PANDEMIC (LATER)", p.later));

    let board = board_window(s.interview_at, f.sched_dep, s.dest_scope, board_threshold);
    v.push(("BOARD (NOT)", b(board == Board::Not)));
    v.push(("BOARD (CALL)", b(board == Board::Call)));
    v.push(("BOARD (NOW)", b(board == Board::Now)));

    v.push(("AIRCSIZE", f.seats as f64 / 100.0));
    v.push(("LOADFAC", (f.pax as f64 / f.seats as f64).min(1.0)));
    v.push((
        "PRCONNECT",
        if f.pax == 0 { 0.0 } else { f.connecting_pax as f64 / f.pax as f64 },
    ));
    v.push(("CARGO", f.cargo_kg / 10_000.0));
    v.push(("DISTANCE", f.distance_mi / 1000.0));
    v.push(("WEATHER (ORG)", b(r.weather_org)));
    v.push(("WEATHER (DST)", b(r.weather_dst)));
    Ok(RowValues(v))
}

impl FeatureTable {
    /// Two passes: sample aggregates (DISSAT hour groups, time-to-flight
    /// quantile), then per-record values in parallel.
    pub fn build(records: &[JoinedRecord], spec: &FeatureSpec) -> Result<Self> {
        spec.validate()?;
        if records.is_empty() {
            return Err(Error::Data("no records to build features from".into()));
        }
        let minutes: Vec<f64> = records.iter().map(|r| r.minutes_to_flight()).collect();
        let board_threshold = quantile(&minutes, spec.board_quantile).expect("non-empty");

        let rows: Vec<RowValues> = records
            .par_iter()
            .map(|r| row_values(r, spec, board_threshold))
            .collect::<Result<_>>()?;

        let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for row in &rows {
            for (k, v) in &row.0 {
                columns.entry(k.to_string()).or_default().push(*v);
            }
        }

        let keys: Vec<_> = records
            .iter()
            .map(|r| spec.dissat_grouping.key(r.survey.interview_at))
            .collect();
        for (name, question) in DISSAT {
            let ratings: Vec<u8> = records.iter().map(|r| r.survey.domain_ratings.get(question)).collect();
            columns.insert(name.to_string(), dissat_ratios(&ratings, &keys, spec.dissat_mode));
        }
        let secinsp = columns["DISSAT (SECINSP)"].clone();
        columns.insert("SECINSPTIME".to_string(), secinsp);

        Ok(Self {
            respondent_ids: records.iter().map(|r| r.survey.respondent_id.0.clone()).collect(),
            aptsat: records.iter().map(|r| r.survey.global_rating.get() as i64).collect(),
            cluster_id: records.iter().map(|r| r.cluster_label()).collect(),
            destination: records.iter().map(|r| r.flight.destination.clone()).collect(),
            airline: records.iter().map(|r| r.flight.airline.clone()).collect(),
            date: records
                .iter()
                .map(|r| r.flight.date.format("%Y-%m-%d").to_string())
                .collect(),
            ttf_bin: minutes.iter().map(|&m| spec.time_to_flight.bin(m)).collect(),
            minutes_to_flight: minutes,
            board_threshold_min: board_threshold,
            spec: spec.clone(),
            columns,
        })
    }

    pub fn nrows(&self) -> usize {
        self.aptsat.len()
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(|s| s.as_str())
    }

    /// Adds or replaces a derived column.
    pub fn set_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.nrows() {
            return Err(Error::Contract(format!("column `{name}` has wrong length")));
        }
        self.columns.insert(name.to_string(), values);
        Ok(())
    }

    fn product(&self, a: &str, b: &str) -> Result<Vec<f64>> {
        let (x, y) = (self.column(a)?, self.column(b)?);
        Ok(x.iter().zip(y).map(|(p, q)| p * q).collect())
    }

    /// Delay columns for an encoding, as (name, values).
    pub fn delay_columns(&self, enc: DelayEncoding) -> Result<Vec<(String, Vec<f64>)>> {
        let one = |n: &str| -> Result<(String, Vec<f64>)> { Ok((n.to_string(), self.column(n)?.to_vec())) };
        let inter = |a: &str, b: &str| -> Result<(String, Vec<f64>)> {
            Ok((format!("{a} × {b}"), self.product(a, b)?))
        };
        match enc {
            DelayEncoding::Dummy => Ok(vec![one("DEL")?]),
            DelayEncoding::Duration => Ok(vec![one("DELDUR")?, one("DELDUR2")?]),
            DelayEncoding::ByBoarding => ["BOARD (NOT)", "BOARD (CALL)", "BOARD (NOW)"]
                .iter()
                .map(|b| inter("DEL", b))
                .collect(),
            DelayEncoding::ByFlier => ["FIRSTTFLIER", "EXPERCDFLIER", "FREQFLIER"]
                .iter()
                .map(|b| inter("DEL", b))
                .collect(),
            DelayEncoding::ByAmenity => ["FOOD (4/5 RATING)", "SHOPS (4/5 RATING)", "WIFI (4/5 RATING)"]
                .iter()
                .map(|b| inter("DEL", b))
                .collect(),
            DelayEncoding::DurationByPurpose => vec![
                inter("DELDUR", "LSRFLIER")?,
                inter("DELDUR", "BSNFLIER")?,
                inter("DELDUR2", "LSRFLIER")?,
                inter("DELDUR2", "BSNFLIER")?,
            ]
            .into_iter()
            .map(Ok)
            .collect(),
        }
    }

    /// Reference-dropped dummies for a categorical, plus the reference used.
    fn dummy_block(
        &self,
        prefix: &str,
        labels: &[String],
        reference: Option<&String>,
    ) -> Result<(Vec<(String, Vec<f64>)>, String)> {
        let levels: BTreeSet<&String> = labels.iter().collect();
        let reference = match reference {
            Some(r) if levels.contains(r) => r.clone(),
            Some(r) => {
                return Err(Error::Config(format!("reference level `{r}` for {prefix} not present in sample")))
            }
            None => (*levels.iter().next().expect("non-empty sample")).clone(),
        };
        let cols = levels
            .into_iter()
            .filter(|l| **l != reference)
            .map(|l| {
                let v = labels.iter().map(|x| if x == l { 1.0 } else { 0.0 }).collect();
                (format!("{prefix}={l}"), v)
            })
            .collect();
        Ok((cols, reference))
    }

    /// Eq. (1) roster, delay encoding, then the penalized blocks, per the
    /// spec's groups. Constant columns are dropped with a note; identical
    /// columns are an error.
    pub fn design(&self) -> Result<DesignMatrix> {
        let spec = &self.spec;
        let mut cols: Vec<(String, Vec<f64>, bool)> = Vec::new();
        let mut refs: BTreeMap<String, String> = spec
            .reference_levels
            .iter()
            .filter(|(k, _)| !["DEST", "AIRL", "DATE"].contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();

        if spec.includes(CovariateGroup::Roster) {
            for name in ROSTER {
                cols.push((name.to_string(), self.column(name)?.to_vec(), false));
            }
        }
        if spec.includes(CovariateGroup::Delay) {
            for (name, v) in self.delay_columns(spec.delay_encoding)? {
                cols.push((name, v, false));
            }
        }
        if spec.includes(CovariateGroup::Dissat) {
            for (name, _) in DISSAT {
                cols.push((name.to_string(), self.column(name)?.to_vec(), true));
            }
        }
        if spec.includes(CovariateGroup::Termdis) {
            cols.push(("TERMDIS".to_string(), self.column("TERMDIS")?.to_vec(), true));
        }
        if spec.includes(CovariateGroup::Pandemic) {
            for name in PANDEMIC {
                cols.push((name.to_string(), self.column(name)?.to_vec(), true));
            }
        }
        if spec.includes(CovariateGroup::TimeToFlight) {
            let bins = &spec.time_to_flight;
            for b in 1..bins.n_bins() {
                let v = self.ttf_bin.iter().map(|&x| if x == b { 1.0 } else { 0.0 }).collect();
                cols.push((bins.label(b), v, true));
            }
            refs.insert("TIMETOFLT".into(), bins.label(0));
        }
        let categorical = [
            (CovariateGroup::Destination, "DEST", &self.destination),
            (CovariateGroup::Airline, "AIRL", &self.airline),
            (CovariateGroup::Date, "DATE", &self.date),
        ];
        for (group, prefix, labels) in categorical {
            if spec.includes(group) {
                let (block, reference) = self.dummy_block(prefix, labels, spec.reference_levels.get(prefix))?;
                refs.insert(prefix.to_string(), reference);
                cols.extend(block.into_iter().map(|(n, v)| (n, v, true)));
            }
        }

        let mut notes = Vec::new();
        cols.retain(|(name, v, _)| {
            let constant = v.iter().all(|x| *x == v[0]);
            if constant {
                notes.push(format!("dropped constant column `{name}` (value {})", v[0]));
            }
            !constant
        });
        let mut seen: HashMap<Vec<u64>, &str> = HashMap::new();
        for (name, v, _) in &cols {
            let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
            if let Some(first) = seen.insert(key, name) {
                return Err(Error::DuplicateColumns { first: first.to_string(), second: name.clone() });
            }
        }

        let n = self.nrows();
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j].1[i]);
        let mut dm = DesignMatrix::new(
            self.aptsat.clone(),
            x,
            cols.iter().map(|c| c.0.clone()).collect(),
            cols.iter().map(|c| c.2).collect(),
            self.cluster_id.clone(),
        )?;
        dm.row_ids = self.respondent_ids.clone();
        dm.aux.insert("BSNFLIER".into(), self.column("BSNFLIER")?.to_vec());
        dm.reference_levels = refs;
        dm.notes = notes;
        Ok(dm)
    }

    /// Binary design: `outcome` (0/1) on the named columns, all unpenalized.
    /// Constant columns are dropped with a note.
    pub fn binary_design(&self, outcome: &str, columns: &[&str]) -> Result<DesignMatrix> {
        let y: Vec<i64> = self.column(outcome)?.iter().map(|&v| (v != 0.0) as i64).collect();
        let mut notes = Vec::new();
        let mut kept: Vec<(&str, &[f64])> = Vec::new();
        for &c in columns {
            let v = self.column(c)?;
            if v.iter().all(|x| *x == v[0]) {
                notes.push(format!("dropped constant column `{c}` (value {})", v[0]));
            } else {
                kept.push((c, v));
            }
        }
        let x = DMatrix::from_fn(self.nrows(), kept.len(), |i, j| kept[j].1[i]);
        let mut dm = DesignMatrix::new(
            y,
            x,
            kept.iter().map(|c| c.0.to_string()).collect(),
            vec![false; kept.len()],
            self.cluster_id.clone(),
        )?;
        dm.row_ids = self.respondent_ids.clone();
        dm.notes = notes;
        Ok(dm)
    }
}

/// Build the feature table and assemble the satisfaction design matrix.
pub fn assemble_design(records: &[JoinedRecord], spec: &FeatureSpec) -> Result<DesignMatrix> {
    FeatureTable::build(records, spec)?.design()
}
