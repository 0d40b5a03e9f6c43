//! Per-contributor trajectories and whole synthetic populations.
//!
//! Each user owns four independent Philox streams (noise, fans, gaps,
//! arrival), so a trajectory is a pure function of `(params, seed, start)`
//! and a population is the same regardless of how users are partitioned
//! across workers.
//!
//! # Fan recruitment
//!
//! Under [`Variant::FanLoop`] a submission with noise draw `y` reaches
//! `c0 * y` base viewers (non-fans) and `c1 * fans * y` fan views. New fans
//! are recruited only from the base viewers: `Binomial(round(c0 * y), c2)`,
//! i.e. `c2 * c0` per submission on average. Fan counts therefore grow
//! linearly with the number of submissions, `fans ~ c2 * c0 * n`, and attention
//! becomes `(c0 + c1 * c2 * c0 * n) * y`, which for large `n` is the reinforced
//! model `a * n * y` with `a = c1 * c2 * c0`. Recruiting from the total
//! attention would instead make fan counts grow geometrically in `n`, which
//! contradicts the linear productivity/publicity relation the model is meant
//! to reproduce.

use alloc::vec::Vec;
use core::ops::Range;

use rand_distr::{Binomial, Distribution};

use crate::error::{ConfigError, UsageError};
use crate::events::{EventLog, EventRecord, UserId};
use crate::model::{attention_of, stop_decision, AttentionSample, ModelParams, Variant};
use crate::rng::{PhiloxStream, StreamTag, UserSeed, MAX_USER_INDEX};

/// Default mean gap between submissions: one day.
pub const DEFAULT_GAP_SECONDS: f64 = 86_400.0;

/// One contributor's full trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ContributorHistory {
    pub user_id: UserId,
    pub samples: Vec<AttentionSample>,
    /// Submission times, one per sample, strictly increasing.
    pub timestamps: Vec<i64>,
    /// `true` if the stopping rule fired, `false` if `n_cap` was reached.
    pub stopped: bool,
    /// Fans after the last submission's recruitment.
    pub final_fans: u64,
}

impl ContributorHistory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fan count an observer would record at `time`: the fans held before the
    /// first submission at or after `time`, or the final count if every
    /// submission precedes it.
    pub fn fans_at(&self, time: i64) -> u64 {
        match self.timestamps.iter().position(|&t| t >= time) {
            Some(i) => self.samples[i].fans_before,
            None => self.final_fans,
        }
    }
}

/// Number of contributions and how the trajectory ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lifetime {
    pub n: u64,
    pub stopped: bool,
    pub final_fans: u64,
}

/// Base (non-fan) viewers of a submission with noise draw `y`.
#[inline]
pub fn base_views(params: &ModelParams, y: f64) -> f64 {
    params.c0 * y
}

/// New fans recruited from `base_views` viewers, each converting with
/// probability `c2`.
pub fn fan_conversions(
    base_views: f64,
    params: &ModelParams,
    rng: &mut PhiloxStream,
) -> Result<u64, UsageError> {
    if params.variant != Variant::FanLoop {
        return Err(UsageError {
            operation: "fan_conversions",
            required: "fanloop",
        });
    }
    Ok(draw_conversions(base_views, params.c2, rng))
}

fn draw_conversions(base_views: f64, c2: f64, rng: &mut PhiloxStream) -> u64 {
    let trials = libm::round(base_views.max(0.0)) as u64;
    if trials == 0 || c2 <= 0.0 {
        return 0;
    }
    if c2 >= 1.0 {
        return trials;
    }
    // c2 is validated into (0, 1) here, so construction cannot fail.
    Binomial::new(trials, c2)
        .map(|b| b.sample(rng))
        .unwrap_or(0)
}

/// Stochastic core shared by the full and count-only simulators: noise,
/// attention, fan recruitment and the stopping rule. Time is handled by the
/// caller so count-only runs skip the gap stream entirely.
struct Stepper<'a> {
    params: &'a ModelParams,
    noise: PhiloxStream,
    fans_rng: PhiloxStream,
    n: u64,
    fans: u64,
    finished: bool,
    stopped: bool,
}

impl<'a> Stepper<'a> {
    fn new(params: &'a ModelParams, seed: UserSeed) -> Self {
        Stepper {
            params,
            noise: seed.stream(StreamTag::Noise),
            fans_rng: seed.stream(StreamTag::Fans),
            n: 0,
            fans: 0,
            finished: false,
            stopped: false,
        }
    }

    #[inline]
    fn step(&mut self) -> Option<AttentionSample> {
        if self.finished {
            return None;
        }
        self.n += 1;
        let y = self.params.noise.sample(&mut self.noise);
        let x = attention_of(self.params, self.n, self.fans, y);
        let sample = AttentionSample {
            index: self.n,
            fans_before: self.fans,
            attention: x,
        };
        if self.params.variant == Variant::FanLoop {
            self.fans += draw_conversions(base_views(self.params, y), self.params.c2, &mut self.fans_rng);
        }
        if stop_decision(x, self.params.theta) {
            self.finished = true;
            self.stopped = true;
        } else if self.n >= self.params.n_cap {
            self.finished = true;
        }
        Some(sample)
    }

    fn lifetime(&self) -> Lifetime {
        Lifetime {
            n: self.n,
            stopped: self.stopped,
            final_fans: self.fans,
        }
    }
}

/// Iterator over one contributor's submissions and their timestamps.
pub struct ContributorProcess<'a> {
    stepper: Stepper<'a>,
    gaps: PhiloxStream,
    next_time: i64,
}

impl<'a> ContributorProcess<'a> {
    pub fn new(params: &'a ModelParams, seed: UserSeed, start_time: i64) -> Self {
        debug_assert!(params.validate().is_ok());
        ContributorProcess {
            stepper: Stepper::new(params, seed),
            gaps: seed.stream(StreamTag::Gaps),
            next_time: start_time,
        }
    }

    /// State after the submissions yielded so far.
    pub fn lifetime(&self) -> Lifetime {
        self.stepper.lifetime()
    }
}

impl Iterator for ContributorProcess<'_> {
    type Item = (AttentionSample, i64);

    fn next(&mut self) -> Option<Self::Item> {
        let sample = self.stepper.step()?;
        let t = self.next_time;
        let gap = -self.stepper.params.gap_mean_seconds * libm::log(self.gaps.open01());
        self.next_time = t.saturating_add((libm::ceil(gap) as i64).max(1));
        Some((sample, t))
    }
}

/// Simulates one contributor from her first submission at `start_time` until
/// the stopping rule fires or `n_cap` is reached.
pub fn simulate_contributor(params: &ModelParams, seed: UserSeed, start_time: i64) -> ContributorHistory {
    let mut process = ContributorProcess::new(params, seed, start_time);
    let mut samples = Vec::new();
    let mut timestamps = Vec::new();
    for (s, t) in process.by_ref() {
        samples.push(s);
        timestamps.push(t);
    }
    let life = process.lifetime();
    ContributorHistory {
        user_id: UserId::simulated(seed.user),
        samples,
        timestamps,
        stopped: life.stopped,
        final_fans: life.final_fans,
    }
}

/// Contribution count only. Consumes the same noise and fan draws as
/// [`simulate_contributor`], so `lifetime(..).n` equals the history length.
pub fn lifetime(params: &ModelParams, seed: UserSeed) -> Lifetime {
    let mut stepper = Stepper::new(params, seed);
    while stepper.step().is_some() {}
    stepper.lifetime()
}

/// Arrival time of a simulated user, uniform on `[start_time, capture_time)`.
pub fn arrival_time(seed: UserSeed, start_time: i64, capture_time: i64) -> i64 {
    debug_assert!(capture_time > start_time);
    let span = (capture_time - start_time) as f64;
    let offset = libm::floor(seed.stream(StreamTag::Arrival).open01() * span) as i64;
    start_time + offset.min(capture_time - start_time - 1)
}

/// Window of simulated time a population covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PopulationWindow {
    pub start_time: i64,
    pub capture_time: i64,
}

impl PopulationWindow {
    pub fn new(start_time: i64, capture_time: i64) -> Result<Self, ConfigError> {
        if capture_time <= start_time {
            return Err(ConfigError::new(
                "capture_time",
                "must be later than the start time",
            ));
        }
        Ok(PopulationWindow {
            start_time,
            capture_time,
        })
    }
}

/// Output of simulating a contiguous range of users.
#[derive(Clone, Debug, Default)]
pub struct PopulationChunk {
    /// Records up to the capture time, item ids unassigned (0).
    pub records: Vec<EventRecord>,
    /// Fan counts at the requested snapshot time, for users who had submitted
    /// before it.
    pub fans: Vec<(UserId, u64)>,
    /// Users whose trajectory reached `n_cap` before the capture time.
    pub capped: u64,
}

/// Simulates users `users` of the population seeded by `master_seed`.
/// Trajectories are censored at the capture time.
pub fn population_chunk(
    params: &ModelParams,
    users: Range<u64>,
    master_seed: u64,
    window: PopulationWindow,
    snapshot_time: Option<i64>,
) -> PopulationChunk {
    let mut chunk = PopulationChunk::default();
    for user in users {
        let seed = UserSeed::new(master_seed, user);
        let start = arrival_time(seed, window.start_time, window.capture_time);
        let id = UserId::simulated(user);
        let mut process = ContributorProcess::new(params, seed, start);
        let mut fans_at_snapshot = None;
        let mut last = None;
        for (s, t) in process.by_ref() {
            if let Some(snap) = snapshot_time {
                if fans_at_snapshot.is_none() && t >= snap {
                    fans_at_snapshot = Some(s.fans_before);
                }
            }
            if t > window.capture_time {
                break;
            }
            last = Some(s);
            chunk.records.push(EventRecord {
                user: id.clone(),
                item: 0,
                t,
                x: s.attention,
            });
        }
        let life = process.lifetime();
        if !life.stopped && life.n >= params.n_cap && last.map(|s| s.index) == Some(params.n_cap) {
            chunk.capped += 1;
        }
        if let Some(snap) = snapshot_time {
            if start < snap {
                let fans = fans_at_snapshot.unwrap_or(life.final_fans);
                chunk.fans.push((id, fans));
            }
        }
    }
    chunk
}

/// Concatenates chunks produced for consecutive user ranges (in range order)
/// and numbers the items `1..=len` in canonical order.
pub fn assemble_log(chunks: impl IntoIterator<Item = Vec<EventRecord>>, capture_time: i64) -> EventLog {
    let mut records: Vec<EventRecord> = Vec::new();
    for c in chunks {
        records.extend(c);
    }
    for (i, r) in records.iter_mut().enumerate() {
        r.item = i as u64 + 1;
    }
    EventLog::from_canonical(records, capture_time)
}

/// Simulates `n_users` contributors arriving uniformly over the window and
/// returns the log as observed at the capture time.
pub fn simulate_population(
    params: &ModelParams,
    n_users: u64,
    master_seed: u64,
    start_time: i64,
    capture_time: i64,
) -> Result<EventLog, ConfigError> {
    params.validate()?;
    let window = PopulationWindow::new(start_time, capture_time)?;
    check_user_count(n_users)?;
    let chunk = population_chunk(params, 0..n_users, master_seed, window, None);
    Ok(assemble_log([chunk.records], capture_time))
}

pub fn check_user_count(n_users: u64) -> Result<(), ConfigError> {
    if n_users > MAX_USER_INDEX.min(999_999_999_999) {
        return Err(ConfigError::new("users", "too many users"));
    }
    Ok(())
}
