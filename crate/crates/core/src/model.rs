//! Attention models and the threshold stopping rule.
//!
//! A contributor's `n`-th submission receives attention `X`. Three variants
//! are supported:
//!
//! * [`Variant::Iid`]: `X = a * Y`, the same distribution at every index;
//!   contribution counts are geometric.
//! * [`Variant::Reinforced`]: `X = a * n * Y`; the stopping probability at
//!   index `n` behaves like `F'(0) / n`, which yields a power-law tail with
//!   exponent `F'(0) + 1` in the contribution counts.
//! * [`Variant::FanLoop`]: `X = (c0 + c1 * fans) * Y`, where fans are recruited
//!   from the base audience after every submission (see [`crate::sim`]).
//!
//! `Y` is multiplicative noise with mean one, drawn from a [`NoiseKernel`].
//! A contributor continues only while her latest submission strictly exceeds
//! the global threshold `theta`.

use core::fmt;

use crate::error::ConfigError;
use crate::rng::PhiloxStream;

/// Distribution of the multiplicative noise `Y`. Every family has mean 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKernel {
    /// Exponential with rate 1. Density at zero is 1.
    Exponential,
    /// Uniform on (0, 2). Density at zero is 1/2.
    UniformZeroTwo,
    /// `exp(mu + sigma * Z)` with `mu = -sigma^2 / 2`. Density at zero is 0.
    LogNormal { sigma: f64 },
    /// Always exactly 1.
    Constant,
}

impl NoiseKernel {
    pub fn family(&self) -> &'static str {
        match self {
            NoiseKernel::Exponential => "exponential",
            NoiseKernel::UniformZeroTwo => "uniform02",
            NoiseKernel::LogNormal { .. } => "lognormal",
            NoiseKernel::Constant => "constant",
        }
    }

    /// Family-specific parameters in the order the config file lists them.
    pub fn params(&self) -> alloc::vec::Vec<f64> {
        match *self {
            NoiseKernel::LogNormal { sigma } => alloc::vec![sigma],
            _ => alloc::vec::Vec::new(),
        }
    }

    /// Builds a kernel from its family name and parameter list.
    pub fn from_parts(family: &str, params: &[f64]) -> Result<Self, ConfigError> {
        let kernel = match family {
            "exponential" | "exp" => NoiseKernel::Exponential,
            "uniform02" | "uniform" => NoiseKernel::UniformZeroTwo,
            "constant" => NoiseKernel::Constant,
            "lognormal" => match params {
                [sigma] => NoiseKernel::LogNormal { sigma: *sigma },
                [] => NoiseKernel::LogNormal { sigma: 1.0 },
                _ => {
                    return Err(ConfigError::new(
                        "noise.params",
                        "lognormal takes a single sigma",
                    ))
                }
            },
            _ => return Err(ConfigError::new("noise.family", "unknown noise family")),
        };
        if !matches!(kernel, NoiseKernel::LogNormal { .. }) && !params.is_empty() {
            return Err(ConfigError::new(
                "noise.params",
                "this noise family takes no parameters",
            ));
        }
        kernel.validate()?;
        Ok(kernel)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let NoiseKernel::LogNormal { sigma } = *self {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(ConfigError::new(
                    "noise.params",
                    "lognormal sigma must be positive and finite",
                ));
            }
        }
        Ok(())
    }

    /// Draws one strictly positive sample.
    #[inline]
    pub fn sample(&self, rng: &mut PhiloxStream) -> f64 {
        match *self {
            NoiseKernel::Exponential => -libm::log(rng.open01()),
            NoiseKernel::UniformZeroTwo => 2.0 * rng.open01(),
            NoiseKernel::LogNormal { sigma } => {
                let u1 = rng.open01();
                let u2 = rng.open01();
                let z = libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2);
                libm::exp(-0.5 * sigma * sigma + sigma * z)
            }
            NoiseKernel::Constant => 1.0,
        }
    }

    /// `P(Y <= y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match *self {
            NoiseKernel::Exponential => -libm::expm1(-y),
            NoiseKernel::UniformZeroTwo => (y / 2.0).min(1.0),
            NoiseKernel::LogNormal { sigma } => {
                let z = (libm::log(y) + 0.5 * sigma * sigma) / sigma;
                0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
            }
            NoiseKernel::Constant => {
                if y >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Right-limit of the density at zero.
    pub fn density_at_zero(&self) -> f64 {
        match self {
            NoiseKernel::Exponential => 1.0,
            NoiseKernel::UniformZeroTwo => 0.5,
            NoiseKernel::LogNormal { .. } | NoiseKernel::Constant => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseKernel::Exponential => 1.0,
            NoiseKernel::UniformZeroTwo => 1.0 / 3.0,
            NoiseKernel::LogNormal { sigma } => libm::expm1(sigma * sigma),
            NoiseKernel::Constant => 0.0,
        }
    }
}

/// Draws one noise sample. See [`NoiseKernel::sample`].
pub fn sample_noise(kernel: &NoiseKernel, rng: &mut PhiloxStream) -> Result<f64, ConfigError> {
    kernel.validate()?;
    Ok(kernel.sample(rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Iid,
    Reinforced,
    FanLoop,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Iid => "iid",
            Variant::Reinforced => "reinforced",
            Variant::FanLoop => "fanloop",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ConfigError> {
        match name {
            "iid" => Ok(Variant::Iid),
            "reinforced" => Ok(Variant::Reinforced),
            "fanloop" => Ok(Variant::FanLoop),
            _ => Err(ConfigError::new("variant", "expected iid, reinforced or fanloop")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full parameterisation of one simulated population.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub variant: Variant,
    /// Attention scale `a` (Iid, Reinforced).
    pub a: f64,
    /// Success threshold `theta`, shared by every contributor.
    pub theta: f64,
    pub noise: NoiseKernel,
    /// Base audience per submission (FanLoop).
    pub c0: f64,
    /// Attention contributed per fan (FanLoop).
    pub c1: f64,
    /// Probability that a base viewer becomes a fan (FanLoop).
    pub c2: f64,
    /// Hard cap on contributions per user.
    pub n_cap: u64,
    /// Mean of the exponential gap between consecutive submissions.
    pub gap_mean_seconds: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            variant: Variant::Reinforced,
            a: 1.0,
            theta: 1.0,
            noise: NoiseKernel::Exponential,
            c0: 0.0,
            c1: 0.0,
            c2: 0.0,
            n_cap: 100_000,
            gap_mean_seconds: 86_400.0,
        }
    }
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(key, "must be positive and finite"))
    }
}

fn nonneg(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(key, "must be nonnegative and finite"))
    }
}

impl ModelParams {
    pub fn iid(a: f64, theta: f64, noise: NoiseKernel) -> Self {
        ModelParams {
            variant: Variant::Iid,
            a,
            theta,
            noise,
            ..Default::default()
        }
    }

    pub fn reinforced(a: f64, theta: f64, noise: NoiseKernel) -> Self {
        ModelParams {
            variant: Variant::Reinforced,
            a,
            theta,
            noise,
            ..Default::default()
        }
    }

    pub fn fan_loop(c0: f64, c1: f64, c2: f64, theta: f64, noise: NoiseKernel) -> Self {
        ModelParams {
            variant: Variant::FanLoop,
            theta,
            noise,
            c0,
            c1,
            c2,
            ..Default::default()
        }
    }

    pub fn with_n_cap(mut self, n_cap: u64) -> Self {
        self.n_cap = n_cap;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("a", self.a)?;
        positive("theta", self.theta)?;
        self.noise.validate()?;
        nonneg("c0", self.c0)?;
        nonneg("c1", self.c1)?;
        if !(0.0..=1.0).contains(&self.c2) {
            return Err(ConfigError::new("c2", "must lie in [0, 1]"));
        }
        if self.n_cap == 0 {
            return Err(ConfigError::new("n_cap", "must be at least 1"));
        }
        positive("gap_mean_seconds", self.gap_mean_seconds)?;
        Ok(())
    }

    /// Predicted tail exponent `F'(0) + 1` of the contribution-count
    /// distribution under the reinforced model, where `F` is the CDF of
    /// `a * Y / theta`. `None` for the other variants.
    pub fn predicted_tail_exponent(&self) -> Option<f64> {
        match self.variant {
            Variant::Reinforced => Some(self.theta / self.a * self.noise.density_at_zero() + 1.0),
            _ => None,
        }
    }

    /// Per-step stop probability of the i.i.d. model, `P(a * Y <= theta)`.
    pub fn iid_stop_probability(&self) -> f64 {
        self.noise.cdf(self.theta / self.a)
    }
}

/// One submission: its 1-based index, the fans the author had before it, and
/// the attention it received.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttentionSample {
    pub index: u64,
    pub fans_before: u64,
    pub attention: f64,
}

/// Attention received by submission `n` given `fans` and noise draw `y`.
#[inline]
pub fn attention_of(params: &ModelParams, n: u64, fans: u64, y: f64) -> f64 {
    debug_assert!(n >= 1);
    match params.variant {
        Variant::Iid => params.a * y,
        Variant::Reinforced => params.a * n as f64 * y,
        Variant::FanLoop => (params.c0 + params.c1 * fans as f64) * y,
    }
}

/// `true` when the contributor stops: attention that merely reaches `theta`
/// counts as failure.
#[inline]
pub fn stop_decision(x: f64, theta: f64) -> bool {
    x <= theta
}
