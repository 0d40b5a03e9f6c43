//! Multi-threaded population runs.
//!
//! Users are split into contiguous index ranges, one per worker. Every user
//! draws from its own generator streams, and chunks are merged in range
//! order, so the output does not depend on the number of workers.

use std::num::NonZeroUsize;
use std::ops::Range;
use std::thread;

use attnloop_core::estimators::ContributionHistogram;
use attnloop_core::ingest::FanSnapshot;
use attnloop_core::sim::{self, check_user_count, population_chunk, PopulationWindow};
use attnloop_core::{ConfigError, EventLog, ModelParams, UserSeed};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ATTN_LOOP_THREADS";

/// Available parallelism, capped by `ATTN_LOOP_THREADS` when it holds a
/// positive integer.
pub fn worker_count() -> usize {
    let available = thread::available_parallelism().map_or(1, NonZeroUsize::get);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(cap) if cap > 0 => available.min(cap),
        _ => available,
    }
}

/// Splits `0..n` into at most `parts` contiguous, nearly equal ranges.
pub fn split_range(n: u64, parts: usize) -> Vec<Range<u64>> {
    let parts = (parts.max(1) as u64).min(n.max(1));
    let (base, extra) = (n / parts, n % parts);
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + u64::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Runs `f` on each range on its own scoped thread; results come back in
/// range order.
pub fn map_ranges<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let ranges = split_range(n, workers);
    if ranges.len() == 1 {
        return ranges.into_iter().map(&f).collect();
    }
    thread::scope(|s| {
        let handles: Vec<_> = ranges.into_iter().map(|r| s.spawn(|| f(r))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect()
    })
}

#[derive(Clone, Debug)]
pub struct Population {
    pub log: EventLog,
    /// Present when a snapshot time was requested.
    pub snapshot: Option<FanSnapshot>,
    /// Users whose observed trajectory ended at the contribution cap.
    pub capped: u64,
}

pub fn simulate_population_parallel(
    params: &ModelParams,
    n_users: u64,
    master_seed: u64,
    window: PopulationWindow,
    snapshot_time: Option<i64>,
    workers: usize,
) -> Result<Population, ConfigError> {
    params.validate()?;
    check_user_count(n_users)?;
    let chunks = map_ranges(n_users, workers, |r| {
        population_chunk(params, r, master_seed, window, snapshot_time)
    });
    let capped = chunks.iter().map(|c| c.capped).sum();
    let mut snapshot = snapshot_time.map(FanSnapshot::new);
    let mut records = Vec::with_capacity(chunks.len());
    for chunk in chunks {
        if let Some(snap) = snapshot.as_mut() {
            snap.entries.extend(chunk.fans);
        }
        records.push(chunk.records);
    }
    Ok(Population {
        log: sim::assemble_log(records, window.capture_time),
        snapshot,
        capped,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LifetimeSummary {
    /// Contribution counts of users who stopped.
    pub histogram: ContributionHistogram,
    /// Users who reached the contribution cap without stopping.
    pub capped: u64,
}

/// Complete, uncensored lifetimes of `n_users` contributors, without
/// timestamps or records.
pub fn lifetime_histogram(
    params: &ModelParams,
    n_users: u64,
    master_seed: u64,
    workers: usize,
) -> Result<LifetimeSummary, ConfigError> {
    params.validate()?;
    check_user_count(n_users)?;
    let parts = map_ranges(n_users, workers, |r| {
        let mut s = LifetimeSummary::default();
        for user in r {
            let life = sim::lifetime(params, UserSeed::new(master_seed, user));
            if life.stopped {
                s.histogram.add(life.n, 1);
            } else {
                s.capped += 1;
            }
        }
        s
    });
    let mut total = LifetimeSummary::default();
    for p in parts {
        total.histogram.merge(&p.histogram);
        total.capped += p.capped;
    }
    Ok(total)
}
