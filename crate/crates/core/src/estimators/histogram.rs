use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::EstimateError;
use crate::events::EventLog;
use crate::ingest::filter_stopped_users;

/// `N(n)`: number of users whose final contribution count is `n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContributionHistogram {
    counts: BTreeMap<u64, u64>,
    total_users: u64,
}

impl ContributionHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Histogram of a list of per-user contribution counts. Zero counts are
    /// ignored.
    pub fn from_counts(counts: impl IntoIterator<Item = u64>) -> Self {
        let mut h = Self::new();
        for n in counts {
            h.add(n, 1);
        }
        h
    }

    pub fn from_map(counts: BTreeMap<u64, u64>) -> Self {
        let mut h = Self::new();
        for (n, c) in counts {
            h.add(n, c);
        }
        h
    }

    pub fn add(&mut self, n: u64, users: u64) {
        if n == 0 || users == 0 {
            return;
        }
        *self.counts.entry(n).or_insert(0) += users;
        self.total_users += users;
    }

    pub fn merge(&mut self, other: &ContributionHistogram) {
        for (&n, &c) in &other.counts {
            self.add(n, c);
        }
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn get(&self, n: u64) -> u64 {
        self.counts.get(&n).copied().unwrap_or(0)
    }

    pub fn total_users(&self) -> u64 {
        self.total_users
    }

    pub fn total_contributions(&self) -> u128 {
        self.counts
            .iter()
            .map(|(&n, &c)| u128::from(n) * u128::from(c))
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_users == 0
    }

    pub fn max_n(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    /// Users contributing at least `n` times.
    pub fn at_least(&self, n: u64) -> u64 {
        self.counts.range(n..).map(|(_, &c)| c).sum()
    }

    /// Tail values `n >= x_min` expanded with multiplicity.
    pub fn tail(&self, x_min: u64) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.range(x_min..).map(|(&n, &c)| (n, c))
    }

    /// Empirical complementary CDF `P(n' >= n)` at every support point.
    pub fn ccdf(&self) -> Vec<(u64, f64)> {
        let total = self.total_users as f64;
        let mut remaining = self.total_users;
        self.counts
            .iter()
            .map(|(&n, &c)| {
                let g = remaining as f64 / total;
                remaining -= c;
                (n, g)
            })
            .collect()
    }
}

/// Result of [`contribution_histogram`]: the histogram of stopped users and
/// the number of users left out as still active.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistogramReport {
    pub histogram: ContributionHistogram,
    pub excluded_active: usize,
}

impl HistogramReport {
    /// `true` when every user was still active, leaving nothing to analyse.
    pub fn all_active(&self) -> bool {
        self.histogram.is_empty() && self.excluded_active > 0
    }
}

/// Contribution counts of users considered to have stopped: their last record
/// is at least `inactivity_cutoff_seconds` before the capture time.
pub fn contribution_histogram(log: &EventLog, inactivity_cutoff_seconds: i64) -> HistogramReport {
    let stopped = filter_stopped_users(log, inactivity_cutoff_seconds);
    let mut histogram = ContributionHistogram::new();
    let mut excluded_active = 0;
    for user in log.by_user() {
        if stopped.contains(&user[0].user) {
            histogram.add(user.len() as u64, 1);
        } else {
            excluded_active += 1;
        }
    }
    HistogramReport {
        histogram,
        excluded_active,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HazardPoint {
    pub n: u64,
    /// `N(n) / sum_{m >= n} N(m)`.
    pub hazard: f64,
    /// Users who stopped exactly at `n`.
    pub events: u64,
    /// Users who made at least `n` contributions.
    pub at_risk: u64,
}

/// Discrete stopping probability at every observed contribution count.
#[derive(Clone, Debug, PartialEq)]
pub struct HazardCurve {
    pub points: Vec<HazardPoint>,
}

impl HazardCurve {
    pub fn get(&self, n: u64) -> Option<&HazardPoint> {
        self.points
            .binary_search_by_key(&n, |p| p.n)
            .ok()
            .map(|i| &self.points[i])
    }

    /// `G(n) = prod_{m < n} (1 - h(m))` at each support point. Counts without
    /// observations have zero hazard and contribute a factor of one.
    pub fn survival(&self) -> Vec<(u64, f64)> {
        let mut g = 1.0;
        self.points
            .iter()
            .map(|p| {
                let here = g;
                g *= 1.0 - p.hazard;
                (p.n, here)
            })
            .collect()
    }
}

pub fn hazard(hist: &ContributionHistogram) -> Result<HazardCurve, EstimateError> {
    if hist.is_empty() {
        return Err(EstimateError::InsufficientData {
            what: "hazard",
            needed: 1,
            got: 0,
        });
    }
    let mut at_risk = hist.total_users();
    let points = hist
        .counts()
        .iter()
        .map(|(&n, &events)| {
            let p = HazardPoint {
                n,
                hazard: events as f64 / at_risk as f64,
                events,
                at_risk,
            };
            at_risk -= events;
            p
        })
        .collect();
    Ok(HazardCurve { points })
}
