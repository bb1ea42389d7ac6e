//! Seeded synthetic survey, flight, weather and terminal-hour tables with a
//! known data-generating process.
//!
//! Each terminal-hour carries a congestion shock `z`. Delays follow a probit
//! in `z`, operations and weather. Respondents carry a personality trait
//! `π = −confound_strength·z + ν` that shifts every domain rating and the
//! global-rating index with weight `trait_loading`:
//!
//! ```text
//! APTSAT* = Σ βₖ xₖ + ρ·DEL + airline + destination + trait_loading·π + ε
//! ```
//!
//! `xₖ` are the twenty roster covariates as constructed by
//! [`crate::features`]; cutpoints are placed at sample quantiles of the
//! index so the rating distribution matches the calibration target.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Exp, Poisson, StandardNormal};

use super::join::WeatherIndex;
use super::records::*;
use crate::features::{quantile, weather_flags, FeatureSpec, FeatureTable, ROSTER};
use crate::probit::normal;
use crate::{Error, Result};

/// Which delay enters the satisfaction index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SatisfactionDelay {
    /// The observed delay indicator.
    #[default]
    Observed,
    /// The delay that would have occurred without adverse weather.
    InternalOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    /// Respondents in the clean estimation sample.
    pub n_respondents: usize,
    pub seed: u64,
    /// Weight of the personality trait in domain ratings and the global index.
    pub trait_loading: f64,
    /// True delay coefficient on the latent satisfaction scale.
    pub delay_effect_true: f64,
    /// How strongly terminal-hour congestion lowers the trait.
    pub confound_strength: f64,
    /// Congestion loading in the delay probit.
    pub congestion_delay_effect: f64,
    /// Terminal shifts in the delay probit (T1, T3), relative to T2.
    pub terminal_delay_shift: (f64, f64),
    /// Weather coefficients in the delay probit (origin, destination).
    pub weather_effect: (f64, f64),
    pub satisfaction_delay: SatisfactionDelay,
    /// Extra rows per clean row that the sample filters or join must remove.
    pub contamination: f64,
    /// Variable → (mean, sd). Supported: DEL, APTSAT, LOADFAC.
    pub calibration_targets: BTreeMap<String, (f64, f64)>,
}

pub fn default_targets() -> BTreeMap<String, (f64, f64)> {
    [("DEL", (0.17, 0.37)), ("APTSAT", (8.07, 1.72)), ("LOADFAC", (0.82, 0.17))]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::flagship(7)
    }
}

impl SyntheticConfig {
    /// The calibrated confounded design at the paper's sample size.
    pub fn flagship(seed: u64) -> Self {
        Self {
            n_respondents: 13_071,
            seed,
            trait_loading: 0.5,
            delay_effect_true: -0.3,
            confound_strength: 0.5,
            congestion_delay_effect: 0.5,
            terminal_delay_shift: (0.30, 0.20),
            weather_effect: (0.45, 0.35),
            satisfaction_delay: SatisfactionDelay::Observed,
            contamination: 0.04,
            calibration_targets: default_targets(),
        }
    }

    /// Only internally caused delay lowers satisfaction; terminal delay
    /// shifts follow the published delay-stage estimates.
    pub fn attribution_mirror(seed: u64) -> Self {
        Self {
            delay_effect_true: -0.34,
            confound_strength: 0.0,
            terminal_delay_shift: (1.5836, 0.7622),
            satisfaction_delay: SatisfactionDelay::InternalOnly,
            ..Self::flagship(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_respondents == 0 {
            return Err(Error::Config("n_respondents must be positive".into()));
        }
        for (name, v) in [
            ("trait_loading", self.trait_loading),
            ("delay_effect_true", self.delay_effect_true),
            ("confound_strength", self.confound_strength),
            ("congestion_delay_effect", self.congestion_delay_effect),
            ("terminal_delay_shift.0", self.terminal_delay_shift.0),
            ("terminal_delay_shift.1", self.terminal_delay_shift.1),
            ("weather_effect.0", self.weather_effect.0),
            ("weather_effect.1", self.weather_effect.1),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if !(0.0..=1.0).contains(&self.contamination) {
            return Err(Error::Config("contamination must lie in [0, 1]".into()));
        }
        for (k, &(mean, sd)) in &self.calibration_targets {
            let bad = |msg: &str| Err(Error::Config(format!("calibration target {k}: {msg}")));
            if !(mean > 0.0 && sd > 0.0 && mean.is_finite() && sd.is_finite()) {
                return bad("mean and sd must be positive");
            }
            match k.as_str() {
                "DEL" if mean >= 1.0 => return bad("mean must lie in (0, 1)"),
                "APTSAT" if !(1.0 < mean && mean < 10.0) => return bad("mean must lie in (1, 10)"),
                "LOADFAC" if mean >= 1.0 || sd * sd >= mean * (1.0 - mean) => {
                    return bad("needs mean in (0, 1) and sd² < mean(1 − mean)")
                }
                "DEL" | "APTSAT" | "LOADFAC" => {}
                _ => return bad("unsupported variable (use DEL, APTSAT or LOADFAC)"),
            }
        }
        Ok(())
    }

    fn target(&self, k: &str) -> (f64, f64) {
        self.calibration_targets
            .get(k)
            .copied()
            .unwrap_or_else(|| default_targets()[k])
    }
}

/// Satisfaction-index coefficients on the roster, in [`ROSTER`] order.
pub const ROSTER_BETA: [f64; 20] = [
    0.096, -0.014, 0.129, 0.280, 0.700, 0.420, 0.235, 0.079, -0.152, 0.040, -0.060, -0.050, -0.040, 0.336,
    -0.194, 0.087, 0.133, 0.389, -0.054, 0.106,
];

/// Baseline APTSAT shares for ratings 1..=10 (mean ≈ 8.07).
pub const APTSAT_SHARES: [f64; 10] = [0.008, 0.006, 0.010, 0.016, 0.050, 0.060, 0.140, 0.260, 0.210, 0.240];

/// Known parameters and realized moments of one synthetic draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub seed: u64,
    pub n_respondents: usize,
    pub rho: f64,
    pub trait_loading: f64,
    pub confound_strength: f64,
    pub satisfaction_delay: SatisfactionDelay,
    pub delay_intercept: f64,
    pub weather_effect: (f64, f64),
    pub cutpoints: Vec<f64>,
    pub beta: Vec<(String, f64)>,
    pub del_mean: f64,
    pub aptsat_mean: f64,
    pub loadfac_mean: f64,
    pub n_contamination: usize,
}

impl Truth {
    /// `key: value` lines.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(": ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("seed", self.seed.to_string());
        kv("n_respondents", self.n_respondents.to_string());
        kv("n_contamination", self.n_contamination.to_string());
        kv("rho", self.rho.to_string());
        kv("trait_loading", self.trait_loading.to_string());
        kv("confound_strength", self.confound_strength.to_string());
        kv(
            "satisfaction_delay",
            match self.satisfaction_delay {
                SatisfactionDelay::Observed => "observed",
                SatisfactionDelay::InternalOnly => "internal_only",
            }
            .into(),
        );
        kv("delay_intercept", self.delay_intercept.to_string());
        kv("weather_effect_org", self.weather_effect.0.to_string());
        kv("weather_effect_dst", self.weather_effect.1.to_string());
        kv(
            "cutpoints",
            self.cutpoints.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
        );
        for (name, b) in &self.beta {
            kv(&format!("beta[{name}]"), b.to_string());
        }
        kv("del_mean", self.del_mean.to_string());
        kv("aptsat_mean", self.aptsat_mean.to_string());
        kv("loadfac_mean", self.loadfac_mean.to_string());
        s
    }

    /// Parses `key: value` lines into a map.
    pub fn parse(text: &str) -> BTreeMap<String, String> {
        text.lines()
            .filter_map(|l| l.split_once(": "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }
}

/// Per-respondent latent quantities (clean rows only, respondent order).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRow {
    pub respondent_id: RespondentId,
    pub congestion: f64,
    pub trait_value: f64,
    /// trait_loading·π + ε
    pub composite_error: f64,
    pub internal_delay: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub surveys: Vec<SurveyResponse>,
    pub flights: Vec<FlightRecord>,
    pub weather: Vec<WeatherObservation>,
    pub terminal_hours: Vec<TerminalHourStats>,
    pub truth: Truth,
    pub latent: Vec<LatentRow>,
}

const DOMESTIC: [(&str, f64); 18] = [
    ("BEL", 1530.0),
    ("BSB", 540.0),
    ("CGB", 830.0),
    ("CNF", 310.0),
    ("CWB", 210.0),
    ("FLN", 300.0),
    ("FOR", 1460.0),
    ("GIG", 210.0),
    ("GYN", 500.0),
    ("IGU", 530.0),
    ("MAO", 1690.0),
    ("MCZ", 1200.0),
    ("NAT", 1440.0),
    ("POA", 530.0),
    ("REC", 1320.0),
    ("SDU", 225.0),
    ("SSA", 900.0),
    ("VIX", 460.0),
];

const REGIONAL: [(&str, f64); 7] = [
    ("ASU", 690.0),
    ("BOG", 2670.0),
    ("EZE", 1040.0),
    ("LIM", 2170.0),
    ("MVD", 980.0),
    ("PTY", 3000.0),
    ("SCL", 1610.0),
];

const LONG_HAUL: [(&str, f64); 12] = [
    ("ADD", 6200.0),
    ("AMS", 6120.0),
    ("ATL", 4680.0),
    ("CDG", 5910.0),
    ("DOH", 7440.0),
    ("DXB", 7590.0),
    ("FRA", 6080.0),
    ("JFK", 4750.0),
    ("LHR", 5850.0),
    ("LIS", 4910.0),
    ("MAD", 5200.0),
    ("MIA", 4070.0),
];

#[derive(Debug, Clone)]
struct Route {
    flight_no: String,
    airline: &'static str,
    destination: &'static str,
    distance_mi: f64,
    scope: DestScope,
    terminal: Terminal,
    minute_of_day: u32,
    seats: u32,
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn departure_minute(rng: &mut ChaCha8Rng) -> u32 {
    let hour = if rng.random::<f64>() < 0.12 {
        *[23u32, 0, 1, 2, 5].choose(rng).expect("non-empty")
    } else {
        rng.random_range(6..23)
    };
    hour * 60 + 5 * rng.random_range(0..12)
}

fn build_routes(rng: &mut ChaCha8Rng) -> Vec<Route> {
    let mut routes = Vec::new();
    let mut counters: BTreeMap<&str, u32> = BTreeMap::new();
    let mut add = |rng: &mut ChaCha8Rng,
                   airline: &'static str,
                   dest: (&'static str, f64),
                   scope: DestScope,
                   terminal: Terminal,
                   seats: u32,
                   count: usize| {
        for _ in 0..count {
            let c = counters.entry(airline).or_insert(1000);
            *c += rng.random_range(1..40);
            let jitter = rng.random_range(0..=20) as i64 - 10;
            routes.push(Route {
                flight_no: format!("{airline}{c}"),
                airline,
                destination: dest.0,
                distance_mi: dest.1,
                scope,
                terminal,
                minute_of_day: departure_minute(rng),
                seats: (seats as i64 + jitter).max(50) as u32,
            });
        }
    };
    for d in DOMESTIC.iter().take(12) {
        add(rng, "AD", *d, DestScope::Domestic, Terminal::T1, 118, 2);
    }
    for d in DOMESTIC.iter().skip(10) {
        add(rng, "AD", *d, DestScope::Domestic, Terminal::T2, 118, 1);
    }
    for d in DOMESTIC.iter().step_by(3) {
        add(rng, "G3", *d, DestScope::Domestic, Terminal::T1, 176, 1);
    }
    for d in DOMESTIC {
        add(rng, "G3", d, DestScope::Domestic, Terminal::T2, 176, 2);
        add(rng, "LA", d, DestScope::Domestic, Terminal::T2, 174, 2);
    }
    for d in REGIONAL {
        add(rng, "AR", d, DestScope::International, Terminal::T2, 170, 1);
        add(rng, "CM", d, DestScope::International, Terminal::T2, 160, 1);
        add(rng, "LA", d, DestScope::International, Terminal::T3, 220, 1);
    }
    let long_haul_airlines = ["AA", "AF", "BA", "DL", "EK", "ET", "KL", "LH", "QR", "TP", "UA", "LA"];
    for d in LONG_HAUL {
        for &a in long_haul_airlines.choose_multiple(rng, 3) {
            add(rng, a, d, DestScope::International, Terminal::T3, 300, 1);
        }
    }
    routes
}

/// Survey calendar: seven interview days per month, Feb 2018–Jul 2021,
/// no interviews Apr–Dec 2020. Buckets: reference (2018, Jan–Feb 2020),
/// 2019, Mar 2020, 2021.
fn survey_calendar() -> [Vec<NaiveDate>; 4] {
    let days = [3u32, 7, 11, 15, 19, 23, 27];
    let month_days = |y: i32, m: u32| days.iter().map(move |&d| NaiveDate::from_ymd_opt(y, m, d).expect("valid"));
    let mut reference: Vec<NaiveDate> = (2..=12).flat_map(|m| month_days(2018, m)).collect();
    reference.extend((1..=2).flat_map(|m| month_days(2020, m)));
    let pre = (1..=12).flat_map(|m| month_days(2019, m)).collect();
    let early = month_days(2020, 3).collect();
    let later = (1..=7).flat_map(|m| month_days(2021, m)).collect();
    [reference, pre, early, later]
}

const BUCKET_SHARES: [f64; 4] = [0.40, 0.43, 0.03, 0.14];

fn pick_weighted<T: Copy>(rng: &mut ChaCha8Rng, items: &[(T, f64)]) -> T {
    let u: f64 = rng.random::<f64>() * items.iter().map(|i| i.1).sum::<f64>();
    let mut acc = 0.0;
    for (v, w) in items {
        acc += w;
        if u < acc {
            return *v;
        }
    }
    items.last().expect("non-empty").0
}

struct Respondent {
    id: RespondentId,
    route: usize,
    flight_date: NaiveDate,
    ttf_min: i64,
    age: AgeBracket,
    schooling: Schooling,
    boardings: u32,
    purpose: Purpose,
    connecting: bool,
    canceled: bool,
    unknown_flight: bool,
}

fn draw_respondent(
    rng: &mut ChaCha8Rng,
    id: usize,
    routes: &[Route],
    by_terminal: &BTreeMap<(Terminal, DestScope), Vec<usize>>,
    calendar: &[Vec<NaiveDate>; 4],
) -> Respondent {
    let bucket = pick_weighted(rng, &[(0usize, BUCKET_SHARES[0]), (1, BUCKET_SHARES[1]), (2, BUCKET_SHARES[2]), (3, BUCKET_SHARES[3])]);
    let flight_date = *calendar[bucket].choose(rng).expect("non-empty");
    let terminal = pick_weighted(rng, &[(Terminal::T1, 0.08), (Terminal::T2, 0.70), (Terminal::T3, 0.22)]);
    let scope = match terminal {
        Terminal::T1 => DestScope::Domestic,
        Terminal::T2 if rng.random::<f64>() < 0.13 => DestScope::International,
        Terminal::T2 => DestScope::Domestic,
        Terminal::T3 => DestScope::International,
    };
    let route = *by_terminal[&(terminal, scope)].choose(rng).expect("routes exist");
    debug_assert_eq!(routes[route].terminal, terminal);
    let ttf: f64 = 62.0 + 28.0 * std_normal(rng);
    let ttf_min = ttf.round().clamp(-15.0, 120.0) as i64;
    let age = pick_weighted(
        rng,
        &[
            (AgeBracket::UpTo21, 0.05),
            (AgeBracket::From22To25, 0.05),
            (AgeBracket::From26To34, 0.20),
            (AgeBracket::From35To44, 0.17),
            (AgeBracket::From45To54, 0.32),
            (AgeBracket::From55To64, 0.12),
            (AgeBracket::From65To75, 0.05),
            (AgeBracket::From76, 0.04),
        ],
    );
    let schooling = pick_weighted(
        rng,
        &[
            (Schooling::Illiterate, 0.005),
            (Schooling::Elementary, 0.015),
            (Schooling::Middle, 0.03),
            (Schooling::High, 0.14),
            (Schooling::CollegeUnfinished, 0.16),
            (Schooling::College, 0.65),
        ],
    );
    let flier = rng.random::<f64>();
    let boardings = if flier < 0.31 {
        0
    } else if flier < 0.61 {
        rng.random_range(1..=2)
    } else {
        rng.random_range(3..=20)
    };
    let purpose = pick_weighted(rng, &[(Purpose::Leisure, 0.62), (Purpose::Business, 0.3042), (Purpose::Other, 0.0758)]);
    Respondent {
        id: RespondentId(format!("R{id:07}")),
        route,
        flight_date,
        ttf_min,
        age,
        schooling,
        boardings,
        purpose,
        connecting: false,
        canceled: false,
        unknown_flight: false,
    }
}

/// Share of flights operated from a terminal other than the route's home.
const TERMINAL_SWITCH: f64 = 0.15;

fn alternate_terminal(home: Terminal, scope: DestScope) -> Terminal {
    match (home, scope) {
        (Terminal::T2, DestScope::International) => Terminal::T3,
        (Terminal::T2, DestScope::Domestic) => Terminal::T1,
        _ => Terminal::T2,
    }
}

fn sched_dep(route: &Route, date: NaiveDate) -> NaiveDateTime {
    date.and_hms_opt(route.minute_of_day / 60, route.minute_of_day % 60, 0)
        .expect("valid time")
}

/// Domain-question location offsets (rating mean ≈ 3 + offset).
fn question_offset(q: Question) -> (f64, f64) {
    // (offset, missing probability)
    match q {
        Question::Curbside => (0.9, 0.03),
        Question::CheckinTime => (0.8, 0.05),
        Question::Wayfinding => (1.1, 0.02),
        Question::WalkDistance => (0.9, 0.02),
        Question::FlightInfo => (1.1, 0.02),
        Question::SecurityTime => (1.0, 0.02),
        Question::AirlineStaff => (1.1, 0.06),
        Question::ShopQuality | Question::ShopVariety => (0.55, 0.04),
        Question::FoodQuality | Question::FoodVariety => (0.55, 0.03),
        Question::ShopPrice | Question::FoodPrice => (-0.6, 0.04),
        Question::Wifi => (0.05, 0.25),
    }
}

fn domain_rating(rng: &mut ChaCha8Rng, q: Question, shift: f64) -> u8 {
    let (offset, p_missing) = question_offset(q);
    if rng.random::<f64>() < p_missing {
        return 0;
    }
    let latent = offset + shift + std_normal(rng);
    1 + [-1.5, -0.5, 0.5, 1.5].iter().filter(|&&t| latent > t).count() as u8
}

/// Shares tilted exponentially so their mean hits `mean`.
fn tilted_shares(mean: f64) -> [f64; 10] {
    let shares_for = |t: f64| {
        let w: Vec<f64> = APTSAT_SHARES
            .iter()
            .enumerate()
            .map(|(k, p)| p * (t * (k as f64 + 1.0)).exp())
            .collect();
        let s: f64 = w.iter().sum();
        let mut out = [0.0; 10];
        for (o, v) in out.iter_mut().zip(w) {
            *o = v / s;
        }
        out
    };
    let mean_for = |t: f64| shares_for(t).iter().enumerate().map(|(k, p)| (k as f64 + 1.0) * p).sum::<f64>();
    let (mut lo, mut hi) = (-5.0, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_for(mid) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shares_for(0.5 * (lo + hi))
}

/// Intercept `a` with mean Φ(a + idx) equal to `target`.
fn calibrate_intercept(idx: &[f64], target: f64) -> f64 {
    let mean_p = |a: f64| idx.iter().map(|&v| normal::cdf(a + v)).sum::<f64>() / idx.len() as f64;
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn beta_params(mean: f64, sd: f64) -> (f64, f64) {
    let k = mean * (1.0 - mean) / (sd * sd) - 1.0;
    (mean * k, (1.0 - mean) * k)
}

struct HourState {
    stats: TerminalHourStats,
    congestion: f64,
}

#[derive(Clone)]
struct FlightDraw {
    record: FlightRecord,
    hour: (Terminal, NaiveDateTime),
    delay_index: f64,
    canceled: bool,
}

/// Generate one synthetic dataset; a pure function of the configuration.
pub fn synthesize_dataset(cfg: &SyntheticConfig) -> Result<SyntheticDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let routes = build_routes(&mut rng);
    let mut by_terminal: BTreeMap<(Terminal, DestScope), Vec<usize>> = BTreeMap::new();
    for (i, r) in routes.iter().enumerate() {
        by_terminal.entry((r.terminal, r.scope)).or_default().push(i);
    }
    let calendar = survey_calendar();
    let airline_effect: BTreeMap<&str, f64> = routes
        .iter()
        .map(|r| r.airline)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|a| (a, 0.08 * std_normal(&mut rng)))
        .collect();
    let dest_effect: BTreeMap<&str, f64> = routes
        .iter()
        .map(|r| r.destination)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|d| (d, 0.05 * std_normal(&mut rng)))
        .collect();

    // Respondents: clean rows, then rows the pipeline must filter out.
    let n = cfg.n_respondents;
    let n_extra = (n as f64 * cfg.contamination).round() as usize;
    let mut people: Vec<Respondent> = (0..n + n_extra)
        .map(|i| draw_respondent(&mut rng, i + 1, &routes, &by_terminal, &calendar))
        .collect();
    for (k, p) in people[n..].iter_mut().enumerate() {
        match k % 4 {
            0 => p.connecting = true,
            1 => p.ttf_min = rng.random_range(150..=240),
            2 => p.canceled = true,
            _ => p.unknown_flight = true,
        }
    }

    // Flights: one per (route, date); canceled ones are separate route-days.
    let (lf_mean, lf_sd) = cfg.target("LOADFAC");
    let (lf_a, lf_b) = beta_params(lf_mean, lf_sd);
    let loadfac = Beta::new(lf_a, lf_b).map_err(|e| Error::Config(format!("LOADFAC target: {e}")))?;
    let mut flight_keys: BTreeMap<(usize, NaiveDate, bool), usize> = BTreeMap::new();
    for p in &people {
        if !p.unknown_flight {
            let next = flight_keys.len();
            flight_keys.entry((p.route, p.flight_date, p.canceled)).or_insert(next);
        }
    }
    // A canceled route-day must not collide with an operated one.
    let operated: BTreeSet<(usize, NaiveDate)> =
        flight_keys.keys().filter(|k| !k.2).map(|k| (k.0, k.1)).collect();
    for p in people.iter_mut().filter(|p| p.canceled) {
        while operated.contains(&(p.route, p.flight_date)) {
            p.flight_date += Duration::days(1);
        }
    }
    let mut flight_keys: BTreeMap<(usize, NaiveDate, bool), usize> = BTreeMap::new();
    for p in &people {
        if !p.unknown_flight {
            let next = flight_keys.len();
            flight_keys.entry((p.route, p.flight_date, p.canceled)).or_insert(next);
        }
    }
    let mut flights: Vec<FlightDraw> = Vec::with_capacity(flight_keys.len());
    let mut flight_index: BTreeMap<(usize, NaiveDate, bool), usize> = BTreeMap::new();
    for &(route, date, canceled) in flight_keys.keys() {
        let r = &routes[route];
        let sched = sched_dep(r, date);
        let lf: f64 = loadfac.sample(&mut rng);
        let pax = ((r.seats as f64) * lf).round() as u32;
        let share: f64 = Beta::new(0.4, 7.6).expect("valid").sample(&mut rng);
        let connecting_pax = Binomial::new(pax as u64, share).expect("valid").sample(&mut rng) as u32;
        let cargo_mean = match r.scope {
            DestScope::Domestic => 1000.0,
            DestScope::International => 6500.0,
        };
        let cargo_kg = (Exp::new(1.0 / cargo_mean).expect("valid").sample(&mut rng) as f64).min(55_000.0).round();
        let p_bridge = match r.terminal {
            Terminal::T1 => 0.45,
            Terminal::T2 => 0.75,
            Terminal::T3 => 0.95,
        };
        let jetbridge = rng.random::<f64>() < p_bridge;
        let terminal = if rng.random::<f64>() < TERMINAL_SWITCH {
            alternate_terminal(r.terminal, r.scope)
        } else {
            r.terminal
        };
        flight_index.insert((route, date, canceled), flights.len());
        flights.push(FlightDraw {
            record: FlightRecord {
                flight_no: FlightNo(r.flight_no.clone()),
                date,
                sched_dep: sched,
                actual_dep: None,
                airline: r.airline.to_string(),
                destination: r.destination.to_string(),
                distance_mi: r.distance_mi,
                seats: r.seats,
                pax,
                connecting_pax,
                cargo_kg,
                jetbridge,
                terminal,
            },
            hour: (terminal, truncate_to_hour(sched)),
            delay_index: 0.0,
            canceled,
        });
    }

    // Terminal-hour congestion and traffic aggregates.
    let hour_keys: BTreeSet<(Terminal, NaiveDateTime)> = flights.iter().map(|f| f.hour).collect();
    let dates: BTreeSet<NaiveDate> = hour_keys.iter().map(|k| k.1.date()).collect();
    let date_shift: BTreeMap<NaiveDate, f64> = dates.into_iter().map(|d| (d, 0.3 * std_normal(&mut rng))).collect();
    let mut day_pax: BTreeMap<(Terminal, NaiveDate), u32> = BTreeMap::new();
    let mut hours: BTreeMap<(Terminal, NaiveDateTime), HourState> = BTreeMap::new();
    for &(terminal, hour) in &hour_keys {
        let z = date_shift[&hour.date()] + std_normal(&mut rng);
        let (day_base, hour_base, area) = match terminal {
            Terminal::T1 => (6_000.0, 450.0, 25_000.0),
            Terminal::T2 => (36_000.0, 2_000.0, 80_000.0),
            Terminal::T3 => (24_000.0, 1_400.0, 70_000.0),
        };
        let pax_day = *day_pax
            .entry((terminal, hour.date()))
            .or_insert_with(|| (day_base * (0.25 * std_normal(&mut rng)).exp()).clamp(1_800.0, 49_400.0) as u32);
        let profile = if (6..23).contains(&hour.hour()) { 1.0 } else { 0.45 };
        let pax_hour = (hour_base * profile * (0.35 * std_normal(&mut rng)).exp()).clamp(0.0, 4_980.0) as u32;
        let p_term = normal::cdf(-1.2 + 0.8 * z);
        let pax_delayed_hour = Binomial::new(pax_hour as u64, p_term).expect("valid").sample(&mut rng) as u32;
        let movements_hour = (35.0 + 11.0 * std_normal(&mut rng)).round().clamp(1.0, 66.0) as u32;
        let disrupted_hour = Binomial::new(movements_hour as u64, normal::cdf(-1.2 + 0.6 * z))
            .expect("valid")
            .sample(&mut rng) as u32;
        let dep_total_3h = Poisson::new(75.0).expect("valid").sample(&mut rng) as u32;
        let arr_total_3h = Poisson::new(70.0).expect("valid").sample(&mut rng) as u32;
        let dep_delayed_3h = Binomial::new(dep_total_3h as u64, normal::cdf(-1.1 + 0.5 * z))
            .expect("valid")
            .sample(&mut rng) as u32;
        let arr_delayed_3h = Binomial::new(arr_total_3h as u64, normal::cdf(-1.4 + 0.5 * z))
            .expect("valid")
            .sample(&mut rng) as u32;
        hours.insert(
            (terminal, hour),
            HourState {
                congestion: z,
                stats: TerminalHourStats {
                    terminal,
                    hour,
                    pax_hour,
                    pax_day,
                    pax_delayed_hour,
                    dep_total_3h,
                    dep_delayed_3h,
                    arr_total_3h,
                    arr_delayed_3h,
                    movements_hour,
                    declared_capacity: 57,
                    disrupted_hour,
                    terminal_area_m2: area,
                },
            },
        );
    }

    // Weather: hourly observations at the origin and each destination.
    let mut weather = Vec::new();
    let stations: BTreeSet<(Station, NaiveDateTime)> = flights
        .iter()
        .flat_map(|f| {
            let h = f.hour.1;
            let dst = Station::Destination(f.record.destination.clone());
            [(Station::Origin, h), (Station::Origin, h + Duration::hours(1)), (dst.clone(), h), (dst, h + Duration::hours(1))]
        })
        .collect();
    for (station, at) in stations {
        if rng.random::<f64>() < 0.02 {
            continue;
        }
        let p_adverse = match station {
            Station::Origin => 0.03,
            Station::Destination(_) => 0.09,
        };
        let mut o = WeatherObservation::nominal(station, at);
        o.ceiling_ft = Some(rng.random_range(1_500.0..9_000.0_f64).round());
        if rng.random::<f64>() < 0.05 {
            o.ceiling_ft = None;
        }
        if rng.random::<f64>() < 0.3 {
            o.gust_kt = Some(rng.random_range(5.0..25.0_f64).round());
        }
        o.wet_runway = rng.random::<f64>() < 0.2;
        if rng.random::<f64>() < p_adverse {
            match rng.random_range(0..5) {
                0 => o.ceiling_ft = Some(rng.random_range(200.0..590.0_f64).round()),
                1 => o.visibility_m = Some(rng.random_range(300.0..1_400.0_f64).round()),
                2 => {
                    o.wet_runway = true;
                    o.gust_kt = Some(rng.random_range(28.0..45.0_f64).round());
                }
                3 => o.thunderstorm = true,
                _ => o.hail = true,
            }
        }
        weather.push(o);
    }
    let wx = WeatherIndex::new(&weather);
    let flags: Vec<(bool, bool)> = flights
        .iter()
        .map(|f| {
            let dst = Station::Destination(f.record.destination.clone());
            (
                weather_flags(wx.nearest(&Station::Origin, f.record.sched_dep)),
                weather_flags(wx.nearest(&dst, f.record.sched_dep)),
            )
        })
        .collect();
    drop(wx);

    // Delay index without intercept; intercept calibrated over clean respondents.
    for f in flights.iter_mut() {
        let h = &hours[&f.hour];
        let tm = crate::features::terminal_metrics(&h.stats);
        let terminal_shift = match f.record.terminal {
            Terminal::T1 => cfg.terminal_delay_shift.0,
            Terminal::T2 => 0.0,
            Terminal::T3 => cfg.terminal_delay_shift.1,
        };
        let lf = f.record.pax as f64 / f.record.seats as f64;
        let later = (f.record.date.year() == 2021) as u8 as f64;
        f.delay_index = cfg.congestion_delay_effect * h.congestion
            + terminal_shift
            + 0.3 * (lf - 0.82)
            + 0.1 * (tm.busyday - 2.9)
            + 0.2 * later;
    }
    let clean_flight = |p: &Respondent| flight_index[&(p.route, p.flight_date, false)];
    let idx: Vec<f64> = people[..n]
        .iter()
        .map(|p| {
            let f = clean_flight(p);
            let (wo, wd) = flags[f];
            flights[f].delay_index
                + cfg.weather_effect.0 * wo as u8 as f64
                + cfg.weather_effect.1 * wd as u8 as f64
        })
        .collect();
    let delay_intercept = calibrate_intercept(&idx, cfg.target("DEL").0);

    let mut internal_delay = vec![false; flights.len()];
    for (k, f) in flights.iter_mut().enumerate() {
        if f.canceled {
            continue;
        }
        let (wo, wd) = flags[k];
        let e = std_normal(&mut rng);
        let internal = delay_intercept + f.delay_index + e;
        let full = internal + cfg.weather_effect.0 * wo as u8 as f64 + cfg.weather_effect.1 * wd as u8 as f64;
        internal_delay[k] = internal > 0.0;
        let minutes: i64 = if full > 0.0 {
            (16.0 + Exp::new(1.0 / 30.0).expect("valid").sample(&mut rng) as f64).min(358.0) as i64
        } else {
            rng.random_range(-10..=15)
        };
        f.record.actual_dep = Some(f.record.sched_dep + Duration::minutes(minutes));
    }

    // Surveys with the trait, domain ratings and a placeholder global rating.
    let mut surveys = Vec::with_capacity(people.len());
    let mut traits = Vec::with_capacity(people.len());
    for (i, p) in people.iter().enumerate() {
        let r = &routes[p.route];
        let (flight_no, sched, terminal, congestion) = if p.unknown_flight {
            (FlightNo(format!("ZZ{}", 9000 + i % 1000)), sched_dep(r, p.flight_date), r.terminal, 0.0)
        } else {
            let f = &flights[flight_index[&(p.route, p.flight_date, p.canceled)]];
            (f.record.flight_no.clone(), f.record.sched_dep, f.record.terminal, hours[&f.hour].congestion)
        };
        let trait_value = -cfg.confound_strength * congestion + std_normal(&mut rng);
        let mut ratings = [0u8; 14];
        for q in Question::ALL {
            ratings[q.index()] = domain_rating(&mut rng, *q, cfg.trait_loading * trait_value);
        }
        traits.push((congestion, trait_value));
        surveys.push(SurveyResponse {
            respondent_id: p.id.clone(),
            interview_at: sched - Duration::minutes(p.ttf_min),
            terminal,
            flight_no,
            global_rating: GlobalRating::new(5).expect("valid"),
            domain_ratings: DomainRatings::new(ratings).expect("valid"),
            age_bracket: p.age,
            schooling: p.schooling,
            boardings_12m: p.boardings,
            purpose: p.purpose,
            dest_scope: r.scope,
            is_connecting: p.connecting,
        });
    }

    // Satisfaction index on the constructed roster covariates.
    let joined: Vec<JoinedRecord> = people[..n]
        .iter()
        .zip(&surveys)
        .map(|(p, s)| {
            let k = clean_flight(p);
            JoinedRecord {
                survey: s.clone(),
                flight: flights[k].record.clone(),
                weather_org: flags[k].0,
                weather_dst: flags[k].1,
                terminal_hour: hours[&flights[k].hour].stats,
            }
        })
        .collect();
    let table = FeatureTable::build(&joined, &FeatureSpec::default())?;
    let roster: Vec<&[f64]> = ROSTER.iter().map(|c| table.column(c)).collect::<Result<_>>()?;
    let del = table.column("DEL")?;
    let mut latent = Vec::with_capacity(n);
    let mut index = Vec::with_capacity(n);
    for (i, p) in people[..n].iter().enumerate() {
        let k = clean_flight(p);
        let delay = match cfg.satisfaction_delay {
            SatisfactionDelay::Observed => del[i],
            SatisfactionDelay::InternalOnly => internal_delay[k] as u8 as f64,
        };
        let xb: f64 = roster.iter().zip(ROSTER_BETA).map(|(c, b)| c[i] * b).sum();
        let r = &routes[p.route];
        let composite = cfg.trait_loading * traits[i].1 + std_normal(&mut rng);
        index.push(xb + cfg.delay_effect_true * delay + airline_effect[r.airline] + dest_effect[r.destination] + composite);
        latent.push(LatentRow {
            respondent_id: p.id.clone(),
            congestion: traits[i].0,
            trait_value: traits[i].1,
            composite_error: composite,
            internal_delay: internal_delay[k],
        });
    }
    let shares = tilted_shares(cfg.target("APTSAT").0);
    let mut cum = 0.0;
    let cutpoints: Vec<f64> = shares[..9]
        .iter()
        .map(|s| {
            cum += s;
            quantile(&index, cum).expect("non-empty")
        })
        .collect();
    let rating_for = |v: f64| 1 + cutpoints.iter().filter(|&&c| v > c).count() as u8;
    for (s, v) in surveys.iter_mut().zip(&index) {
        s.global_rating = GlobalRating::new(rating_for(*v)).expect("in range");
    }
    for s in surveys[n..].iter_mut() {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut rating = 10;
        for (k, sh) in shares.iter().enumerate() {
            acc += sh;
            if u < acc {
                rating = k as u8 + 1;
                break;
            }
        }
        s.global_rating = GlobalRating::new(rating).expect("in range");
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let aptsat: Vec<f64> = surveys[..n].iter().map(|s| s.global_rating.get() as f64).collect();
    let truth = Truth {
        seed: cfg.seed,
        n_respondents: n,
        rho: cfg.delay_effect_true,
        trait_loading: cfg.trait_loading,
        confound_strength: cfg.confound_strength,
        satisfaction_delay: cfg.satisfaction_delay,
        delay_intercept,
        weather_effect: cfg.weather_effect,
        cutpoints: cutpoints.clone(),
        beta: ROSTER.iter().zip(ROSTER_BETA).map(|(n, b)| (n.to_string(), b)).collect(),
        del_mean: mean(del),
        aptsat_mean: mean(&aptsat),
        loadfac_mean: mean(table.column("LOADFAC")?),
        n_contamination: n_extra,
    };

    surveys.sort_by(|a, b| a.respondent_id.cmp(&b.respondent_id));
    let mut flights: Vec<FlightRecord> = flights.into_iter().map(|f| f.record).collect();
    flights.sort_by(|a, b| (a.date, &a.flight_no).cmp(&(b.date, &b.flight_no)));
    weather.sort_by(|a, b| (&a.station, a.at).cmp(&(&b.station, b.at)));
    let terminal_hours = hours.into_values().map(|h| h.stats).collect();
    Ok(SyntheticDataset { surveys, flights, weather, terminal_hours, truth, latent })
}

impl SyntheticDataset {
    /// Writes the four tables and `truth.txt` into `dir`.
    pub fn write(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        super::io::write_surveys(&dir.join("surveys.csv"), &self.surveys)?;
        super::io::write_flights(&dir.join("flights.csv"), &self.flights)?;
        super::io::write_weather(&dir.join("weather.csv"), &self.weather)?;
        super::io::write_terminal_hours(&dir.join("terminal_hours.csv"), &self.terminal_hours)?;
        std::fs::write(dir.join("truth.txt"), self.truth.render())?;
        Ok(())
    }

    /// Join and filter the generated tables.
    pub fn joined(&self) -> Vec<JoinedRecord> {
        let j = super::join::join_records(&self.surveys, &self.flights, &self.weather, &self.terminal_hours);
        super::filter::filter_sample(j.joined).kept
    }
}
