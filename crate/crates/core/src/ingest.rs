//! Filters and joins applied to parsed logs: stopped users, fan snapshots and
//! cohort windows.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::error::{ConfigError, EstimateError};
use crate::events::{EventLog, UserId};

/// Users whose latest record is at or before `capture_time - inactivity_seconds`.
pub fn filter_stopped_users(log: &EventLog, inactivity_seconds: i64) -> BTreeSet<UserId> {
    let cutoff = log.capture_time().saturating_sub(inactivity_seconds);
    log.by_user()
        .filter(|records| records[records.len() - 1].t <= cutoff)
        .map(|records| records[0].user.clone())
        .collect()
}

/// Per-user fan counts recorded at one instant.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FanSnapshot {
    pub entries: BTreeMap<UserId, u64>,
    pub snapshot_time: i64,
}

impl FanSnapshot {
    pub fn new(snapshot_time: i64) -> Self {
        FanSnapshot {
            entries: BTreeMap::new(),
            snapshot_time,
        }
    }

    /// Fans of `user`; users missing from the snapshot have none.
    pub fn fans(&self, user: &UserId) -> u64 {
        self.entries.get(user).copied().unwrap_or(0)
    }
}

/// Half-open observation window `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CohortWindow {
    start: i64,
    end: i64,
}

impl CohortWindow {
    pub fn new(start: i64, end: i64) -> Result<Self, ConfigError> {
        if end <= start {
            return Err(ConfigError::new("window-end", "must be after window-start"));
        }
        Ok(CohortWindow { start, end })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.end
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JoinRow {
    pub user: UserId,
    /// Submissions strictly before the window start.
    pub past_productivity: u64,
    pub fans: u64,
    /// Attention of each submission inside the window.
    pub attentions: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct JoinOutcome {
    pub rows: Vec<JoinRow>,
    /// The window does not overlap the log's time span.
    pub outside_span: bool,
}

impl JoinOutcome {
    /// `(past productivity, fans)` per contributor.
    pub fn productivity_vs_fans(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rows
            .iter()
            .map(|r| (r.past_productivity as f64, r.fans as f64))
    }

    /// `(fans, attention)` per in-window submission.
    pub fn fans_vs_attention(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rows
            .iter()
            .flat_map(|r| r.attentions.iter().map(move |&x| (r.fans as f64, x)))
    }

    pub fn submissions(&self) -> usize {
        self.rows.iter().map(|r| r.attentions.len()).sum()
    }
}

/// Joins fan counts at the snapshot with each contributor's productivity before
/// the window and the attention of her submissions inside it. Contributors
/// without in-window submissions, and those in `exclude`, are omitted.
pub fn fan_attention_join(
    log: &EventLog,
    snapshot: &FanSnapshot,
    window: CohortWindow,
    exclude: &BTreeSet<UserId>,
) -> Result<JoinOutcome, EstimateError> {
    if snapshot.snapshot_time > window.start {
        return Err(EstimateError::InvalidInput(
            "fan snapshot must be taken no later than the window start",
        ));
    }
    let outside_span = match log.time_span() {
        Some((lo, hi)) => window.end <= lo || window.start > hi,
        None => true,
    };
    let mut rows = Vec::new();
    for records in log.by_user() {
        let user = &records[0].user;
        if exclude.contains(user) {
            continue;
        }
        let past = records.partition_point(|r| r.t < window.start);
        let attentions: Vec<f64> = records[past..]
            .iter()
            .take_while(|r| r.t < window.end)
            .map(|r| r.x)
            .collect();
        if attentions.is_empty() {
            continue;
        }
        rows.push(JoinRow {
            user: user.clone(),
            past_productivity: past as u64,
            fans: snapshot.fans(user),
            attentions,
        });
    }
    Ok(JoinOutcome { rows, outside_span })
}
