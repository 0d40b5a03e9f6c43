//! The flat submission log shared by the simulator, the parsers and the
//! estimators.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::fmt;

use crate::error::LogError;

/// Opaque contributor identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(Arc<str>);

impl UserId {
    pub fn new(id: &str) -> Self {
        UserId(Arc::from(id))
    }

    /// Identifier given to the simulated user with this index. Zero-padded so
    /// lexical order equals index order.
    pub fn simulated(index: u64) -> Self {
        UserId(Arc::from(alloc::format!("u{index:012}").as_str()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId::new(s)
    }
}

impl From<String> for UserId {
    fn from(s: String) -> Self {
        UserId(Arc::from(s.as_str()))
    }
}

impl Borrow<str> for UserId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One submission.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub user: UserId,
    pub item: u64,
    /// Submission time in epoch seconds.
    pub t: i64,
    /// Final attention the item received.
    pub x: f64,
}

impl EventRecord {
    pub fn check(&self, capture_time: i64) -> Result<(), LogError> {
        if !(self.x.is_finite() && self.x >= 0.0) {
            return Err(LogError::InvalidAttention(self.x));
        }
        if self.t > capture_time {
            return Err(LogError::AfterCapture {
                t: self.t,
                capture_time,
            });
        }
        Ok(())
    }
}

/// Submissions sorted by `(user, t)` together with the data-capture time.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    records: Vec<EventRecord>,
    capture_time: i64,
}

impl EventLog {
    pub fn empty(capture_time: i64) -> Self {
        EventLog {
            records: Vec::new(),
            capture_time,
        }
    }

    /// Validates and normalises `records` into canonical order.
    pub fn new(mut records: Vec<EventRecord>, capture_time: i64) -> Result<Self, LogError> {
        let mut items = BTreeSet::new();
        for r in &records {
            r.check(capture_time)?;
            if !items.insert(r.item) {
                return Err(LogError::DuplicateItem(r.item));
            }
        }
        records.sort_by(|a, b| a.user.cmp(&b.user).then(a.t.cmp(&b.t)));
        for w in records.windows(2) {
            if w[0].user == w[1].user && w[0].t == w[1].t {
                return Err(LogError::DuplicateTimestamp {
                    user: w[0].user.clone(),
                    t: w[0].t,
                });
            }
        }
        Ok(EventLog {
            records,
            capture_time,
        })
    }

    /// For producers that already emit canonical, valid records.
    pub(crate) fn from_canonical(records: Vec<EventRecord>, capture_time: i64) -> Self {
        debug_assert!(records
            .windows(2)
            .all(|w| (&w[0].user, w[0].t) < (&w[1].user, w[1].t)));
        EventLog {
            records,
            capture_time,
        }
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<EventRecord> {
        self.records
    }

    pub fn capture_time(&self) -> i64 {
        self.capture_time
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Each user's records, oldest first.
    pub fn by_user(&self) -> impl Iterator<Item = &[EventRecord]> {
        self.records.chunk_by(|a, b| a.user == b.user)
    }

    pub fn user_count(&self) -> usize {
        self.by_user().count()
    }

    /// Earliest and latest timestamps, if any.
    pub fn time_span(&self) -> Option<(i64, i64)> {
        let lo = self.records.iter().map(|r| r.t).min()?;
        let hi = self.records.iter().map(|r| r.t).max()?;
        Some((lo, hi))
    }
}
