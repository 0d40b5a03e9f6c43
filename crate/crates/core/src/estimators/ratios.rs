//! Popularity thresholds and popular-ratio series.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::error::EstimateError;
use crate::events::EventLog;
use crate::ingest::filter_stopped_users;
use crate::time::{iso_week, IsoWeek};

/// Nearest-rank quantile: the `ceil(q * M)`-th smallest value.
///
/// An item is popular iff its attention is strictly greater than the
/// returned threshold.
pub fn popularity_threshold(attentions: &[f64], q: f64) -> Result<f64, EstimateError> {
    if attentions.is_empty() {
        return Err(EstimateError::InsufficientData {
            what: "popularity threshold",
            needed: 1,
            got: 0,
        });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(EstimateError::InvalidInput("quantile must lie in (0, 1)"));
    }
    let m = attentions.len();
    let rank = nearest_rank(q, m);
    let mut values: Vec<f64> = attentions.to_vec();
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*v)
}

fn nearest_rank(q: f64, m: usize) -> usize {
    let qm = q * m as f64;
    let nearest = libm::round(qm);
    // q * m that should be an integer but picked up rounding error.
    let rank = if (qm - nearest).abs() <= 1e-9 * m as f64 {
        nearest
    } else {
        libm::ceil(qm)
    };
    (rank as usize).clamp(1, m)
}

#[inline]
pub fn is_popular(x: f64, threshold: f64) -> bool {
    x > threshold
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RatioLabel {
    /// `-1` is a user's last submission, `-2` the one before, ...
    ReverseIndex(i64),
    Week(IsoWeek),
}

impl fmt::Display for RatioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatioLabel::ReverseIndex(i) => write!(f, "{i}"),
            RatioLabel::Week(w) => write!(f, "{w}"),
        }
    }
}

/// Fractions of popular items per label, with their denominators.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RatioSeries {
    pub labels: Vec<RatioLabel>,
    pub values: Vec<f64>,
    pub counts: Vec<u64>,
}

impl RatioSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, label: RatioLabel, popular: u64, total: u64) {
        self.labels.push(label);
        self.values.push(popular as f64 / total as f64);
        self.counts.push(total);
    }

    /// Binomial standard error of entry `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        let r = self.values[i];
        libm::sqrt(r * (1.0 - r) / self.counts[i] as f64)
    }

    /// Ratio over all entries pooled together.
    pub fn pooled(&self) -> f64 {
        let popular: f64 = self
            .values
            .iter()
            .zip(&self.counts)
            .map(|(v, &c)| v * c as f64)
            .sum();
        let total: u64 = self.counts.iter().sum();
        popular / total as f64
    }
}

/// Popular ratio by reverse submission index over users who stopped (per the
/// inactivity cutoff) after at least `k` submissions.
pub fn reverse_index_ratio(log: &EventLog, k: usize, threshold: f64, inactivity_cutoff: i64) -> RatioSeries {
    let mut series = RatioSeries::default();
    if k == 0 {
        return series;
    }
    let stopped = filter_stopped_users(log, inactivity_cutoff);
    let mut popular = alloc::vec![0u64; k];
    let mut users = 0u64;
    for records in log.by_user() {
        if records.len() < k || !stopped.contains(&records[0].user) {
            continue;
        }
        users += 1;
        for (j, r) in records.iter().rev().take(k).enumerate() {
            if is_popular(r.x, threshold) {
                popular[j] += 1;
            }
        }
    }
    if users == 0 {
        return series;
    }
    for j in (0..k).rev() {
        series.push(RatioLabel::ReverseIndex(-(j as i64) - 1), popular[j], users);
    }
    series
}

/// Marks each record (in log order) that is its user's last submission and
/// was made at least `finality_lag` before the capture time.
pub fn final_flags(log: &EventLog, finality_lag: i64) -> Vec<bool> {
    let cutoff = log.capture_time() - finality_lag;
    let mut flags = alloc::vec![false; log.len()];
    let mut offset = 0;
    for records in log.by_user() {
        let last = records.len() - 1;
        flags[offset + last] = records[last].t <= cutoff;
        offset += records.len();
    }
    flags
}

/// `r(t)`: popular ratio of all submissions in ISO week `t`; `r_f(t)`: popular
/// ratio of the final submissions in that week. Weeks without final
/// submissions are dropped from both.
#[derive(Clone, Debug, PartialEq)]
pub struct WeeklyFinalRatios {
    pub all: RatioSeries,
    pub finals: RatioSeries,
}

pub fn weekly_final_ratio(
    log: &EventLog,
    threshold: f64,
    finality_lag: i64,
) -> Result<WeeklyFinalRatios, EstimateError> {
    let flags = final_flags(log, finality_lag);
    weekly_final_ratio_from_flags(log, threshold, &flags)
}

/// [`weekly_final_ratio`] with caller-supplied final flags, one per record.
pub fn weekly_final_ratio_from_flags(
    log: &EventLog,
    threshold: f64,
    flags: &[bool],
) -> Result<WeeklyFinalRatios, EstimateError> {
    if flags.len() != log.len() {
        return Err(EstimateError::InvalidInput("one final flag per record required"));
    }
    #[derive(Default)]
    struct Tally {
        all: u64,
        all_popular: u64,
        finals: u64,
        finals_popular: u64,
    }
    let mut weeks: BTreeMap<IsoWeek, Tally> = BTreeMap::new();
    for (r, &is_final) in log.records().iter().zip(flags) {
        let tally = weeks.entry(iso_week(r.t)).or_default();
        let popular = is_popular(r.x, threshold);
        tally.all += 1;
        tally.all_popular += u64::from(popular);
        if is_final {
            tally.finals += 1;
            tally.finals_popular += u64::from(popular);
        }
    }
    if weeks.len() < 2 {
        return Err(EstimateError::InsufficientData {
            what: "weekly ratios (distinct weeks in log)",
            needed: 2,
            got: weeks.len(),
        });
    }
    let mut all = RatioSeries::default();
    let mut finals = RatioSeries::default();
    for (week, t) in weeks.iter().filter(|(_, t)| t.finals > 0) {
        all.push(RatioLabel::Week(*week), t.all_popular, t.all);
        finals.push(RatioLabel::Week(*week), t.finals_popular, t.finals);
    }
    if all.len() < 2 {
        return Err(EstimateError::InsufficientData {
            what: "weekly ratios (weeks with final submissions)",
            needed: 2,
            got: all.len(),
        });
    }
    Ok(WeeklyFinalRatios { all, finals })
}
