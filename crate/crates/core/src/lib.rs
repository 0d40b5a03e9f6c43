//! Contributor populations driven by attention feedback.
//!
//! Contributors keep submitting while their latest submission receives more
//! attention than a threshold. When attention is drawn from the same
//! distribution every time, contribution counts are geometric; when it grows
//! with the number of past submissions (directly, or through fans recruited
//! along the way) the counts acquire a power-law tail.
//!
//! This crate holds the pure parts: the models ([`model`]), a counter-based
//! generator ([`rng`]), the simulator ([`sim`]), the submission log
//! ([`events`]), log filters and joins ([`ingest`]) and the estimators
//! ([`estimators`]). It is `no_std` with `alloc`; file formats, threading and
//! the command line live in the `attnloop` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod estimators;
pub mod events;
pub mod ingest;
pub mod model;
pub mod rng;
pub mod sim;
pub mod time;

pub use error::{ConfigError, EstimateError, LogError, UsageError};
pub use events::{EventLog, EventRecord, UserId};
pub use model::{attention_of, sample_noise, stop_decision, AttentionSample, ModelParams, NoiseKernel, Variant};
pub use rng::{PhiloxStream, StreamTag, UserSeed};
pub use sim::{simulate_contributor, simulate_population, ContributorHistory, Lifetime};
