//! Sample filters: canceled flights, connecting passengers and the
//! two-hour interview window.

use std::collections::BTreeMap;
use std::fmt;

use super::records::JoinedRecord;

/// Maximum |interview − scheduled departure| in minutes.
pub const WINDOW_MIN: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    Canceled,
    Connecting,
    TimeWindow,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::Canceled => "canceled",
            DropReason::Connecting => "connecting",
            DropReason::TimeWindow => "time-window",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<JoinedRecord>,
    pub dropped: Vec<(JoinedRecord, DropReason)>,
}

impl FilterOutcome {
    pub fn counts(&self) -> BTreeMap<DropReason, usize> {
        let mut m = BTreeMap::new();
        for (_, r) in &self.dropped {
            *m.entry(*r).or_insert(0) += 1;
        }
        m
    }
}

/// First failing filter for a record, checked in the order canceled,
/// connecting, time window.
pub fn drop_reason(r: &JoinedRecord) -> Option<DropReason> {
    if r.flight.is_canceled() {
        Some(DropReason::Canceled)
    } else if r.survey.is_connecting {
        Some(DropReason::Connecting)
    } else if r.minutes_to_flight().abs() > WINDOW_MIN {
        Some(DropReason::TimeWindow)
    } else {
        None
    }
}

pub fn filter_sample(joined: Vec<JoinedRecord>) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for r in joined {
        match drop_reason(&r) {
            Some(reason) => out.dropped.push((r, reason)),
            None => out.kept.push(r),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::join::fixtures::*;
    use crate::data::join::join_records;

    fn joined(interview_h: u32, interview_m: u32, connecting: bool, delay: Option<i64>) -> JoinedRecord {
        let f = flight("G3100", at(3, 13, 0), delay);
        let mut s = survey("R1", "G3100", at(3, interview_h, interview_m));
        s.is_connecting = connecting;
        join_records(&[s], &[f.clone()], &[], &[hour(f.sched_dep)]).joined.remove(0)
    }

    #[test]
    fn three_hours_before_is_dropped() {
        let out = filter_sample(vec![joined(10, 0, false, Some(0))]);
        assert_eq!(out.dropped[0].1, DropReason::TimeWindow);
    }

    #[test]
    fn connecting_is_dropped() {
        let out = filter_sample(vec![joined(12, 0, true, Some(0))]);
        assert_eq!(out.dropped[0].1, DropReason::Connecting);
    }

    #[test]
    fn canceled_is_dropped() {
        let out = filter_sample(vec![joined(12, 0, false, None)]);
        assert_eq!(out.dropped[0].1, DropReason::Canceled);
    }

    #[test]
    fn in_window_is_kept_and_idempotent() {
        let recs = vec![
            joined(12, 0, false, Some(0)),
            joined(11, 0, false, Some(3)),
            joined(10, 59, false, Some(3)),
            joined(15, 30, false, Some(3)),
        ];
        let once = filter_sample(recs);
        assert_eq!(once.kept.len(), 2);
        let twice = filter_sample(once.kept.clone());
        assert_eq!(twice.kept, once.kept);
        assert!(twice.dropped.is_empty());
        assert_eq!(once.counts()[&DropReason::TimeWindow], 2);
    }
}
