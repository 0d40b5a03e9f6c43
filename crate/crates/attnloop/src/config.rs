//! `key = value` model configuration files.
//!
//! ```text
//! # reinforced, exponential noise
//! variant = reinforced
//! a = 1
//! theta = 1
//! noise.family = exponential
//! noise.params =
//! n_cap = 100000
//! ```
//!
//! Keys left out keep their [`ModelParams::default`] value. `noise.params` is
//! a comma-separated list whose meaning depends on the family (`lognormal`
//! takes `sigma`).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use attnloop_core::{ConfigError, ModelParams, NoiseKernel, Variant};

pub const KEYS: [&str; 10] = [
    "variant",
    "a",
    "theta",
    "noise.family",
    "noise.params",
    "c0",
    "c1",
    "c2",
    "n_cap",
    "gap_mean_seconds",
];

fn real(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| ConfigError::new(key, format!("`{value}` is not a number")))
}

pub fn parse_config(text: &str) -> Result<ModelParams, ConfigError> {
    let mut params = ModelParams::default();
    let mut family: Option<String> = None;
    let mut noise_params: Vec<f64> = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(
                format!("line {}", i + 1),
                "expected `key = value`",
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::new(key, "unknown key"));
        }
        if !seen.insert(key.to_owned()) {
            return Err(ConfigError::new(key, "given more than once"));
        }
        match key {
            "variant" => params.variant = Variant::from_name(value)?,
            "a" => params.a = real(key, value)?,
            "theta" => params.theta = real(key, value)?,
            "noise.family" => family = Some(value.to_owned()),
            "noise.params" => {
                noise_params = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| real(key, s))
                    .collect::<Result<_, _>>()?
            }
            "c0" => params.c0 = real(key, value)?,
            "c1" => params.c1 = real(key, value)?,
            "c2" => params.c2 = real(key, value)?,
            "n_cap" => {
                params.n_cap = value
                    .parse()
                    .map_err(|_| ConfigError::new(key, format!("`{value}` is not a nonnegative integer")))?
            }
            "gap_mean_seconds" => params.gap_mean_seconds = real(key, value)?,
            _ => unreachable!(),
        }
    }
    match family {
        Some(f) => params.noise = NoiseKernel::from_parts(&f, &noise_params)?,
        None if !noise_params.is_empty() => {
            return Err(ConfigError::new("noise.params", "given without noise.family"));
        }
        None => {}
    }
    params.validate()?;
    Ok(params)
}

/// Writes every key; reals use the shortest representation that parses back
/// to the same value.
pub fn to_config_string(params: &ModelParams) -> String {
    let noise_params: Vec<String> = params.noise.params().iter().map(|p| p.to_string()).collect();
    let mut out = String::new();
    let _ = writeln!(out, "variant = {}", params.variant.name());
    let _ = writeln!(out, "a = {}", params.a);
    let _ = writeln!(out, "theta = {}", params.theta);
    let _ = writeln!(out, "noise.family = {}", params.noise.family());
    let _ = writeln!(out, "noise.params = {}", noise_params.join(", "));
    let _ = writeln!(out, "c0 = {}", params.c0);
    let _ = writeln!(out, "c1 = {}", params.c1);
    let _ = writeln!(out, "c2 = {}", params.c2);
    let _ = writeln!(out, "n_cap = {}", params.n_cap);
    let _ = writeln!(out, "gap_mean_seconds = {}", params.gap_mean_seconds);
    out
}
