//! Maximum-likelihood fits of contribution counts.

use crate::error::EstimateError;
use crate::estimators::histogram::ContributionHistogram;
use crate::estimators::special::hurwitz_zeta;

/// Fewest tail observations a power-law fit accepts.
pub const MIN_TAIL_POINTS: usize = 10;

/// MLE of the per-step stop probability for counts on `n >= 1`:
/// `p = users / sum(n)`.
///
/// Writing the geometric law as `p (1 - p)^(n - 1)` only normalises when `p` is
/// the probability of stopping, so that is what this returns.
pub fn fit_geometric(hist: &ContributionHistogram) -> Result<f64, EstimateError> {
    if hist.is_empty() {
        return Err(EstimateError::InsufficientData {
            what: "geometric fit",
            needed: 1,
            got: 0,
        });
    }
    Ok(hist.total_users() as f64 / hist.total_contributions() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    /// Exponent of `p_n ~ n^(-alpha)`.
    pub alpha: f64,
    pub x_min: u64,
    pub n_tail: u64,
    /// Log-likelihood of the tail under `n^(-alpha) / zeta(alpha, x_min)`.
    pub log_likelihood: f64,
}

impl PowerLawFit {
    /// Asymptotic standard error `(alpha - 1) / sqrt(n_tail)`.
    pub fn std_error(&self) -> f64 {
        (self.alpha - 1.0) / libm::sqrt(self.n_tail as f64)
    }
}

fn tail_size(hist: &ContributionHistogram, x_min: u64) -> u64 {
    hist.tail(x_min).map(|(_, c)| c).sum()
}

fn insufficient_tail(got: u64) -> EstimateError {
    EstimateError::InsufficientData {
        what: "power-law tail",
        needed: MIN_TAIL_POINTS,
        got: got as usize,
    }
}

/// Discrete power-law MLE on the counts `n >= x_min`, using the continuous
/// approximation `alpha = 1 + n_tail / sum ln(n / (x_min - 1/2))`.
/// Requires at least [`MIN_TAIL_POINTS`] tail observations.
pub fn fit_powerlaw(hist: &ContributionHistogram, x_min: u64) -> Result<PowerLawFit, EstimateError> {
    fit_powerlaw_with_min_tail(hist, x_min, MIN_TAIL_POINTS)
}

/// [`fit_powerlaw`] with a caller-chosen minimum tail size (at least 1).
pub fn fit_powerlaw_with_min_tail(
    hist: &ContributionHistogram,
    x_min: u64,
    min_tail: usize,
) -> Result<PowerLawFit, EstimateError> {
    if x_min == 0 {
        return Err(EstimateError::InvalidInput("x_min must be at least 1"));
    }
    let n_tail = tail_size(hist, x_min);
    if n_tail < min_tail.max(1) as u64 {
        return Err(EstimateError::InsufficientData {
            what: "power-law tail",
            needed: min_tail.max(1),
            got: n_tail as usize,
        });
    }
    let shift = x_min as f64 - 0.5;
    let mut log_sum = 0.0;
    let mut sum_ln_n = 0.0;
    for (n, c) in hist.tail(x_min) {
        log_sum += c as f64 * libm::log(n as f64 / shift);
        sum_ln_n += c as f64 * libm::log(n as f64);
    }
    let alpha = 1.0 + n_tail as f64 / log_sum;
    let log_likelihood = -alpha * sum_ln_n - n_tail as f64 * libm::log(hurwitz_zeta(alpha, x_min as f64));
    Ok(PowerLawFit {
        alpha,
        x_min,
        n_tail,
        log_likelihood,
    })
}

/// Geometric law shifted to start at `x_min`: `p (1 - p)^(n - x_min)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricTailFit {
    pub p: f64,
    pub x_min: u64,
    pub n_tail: u64,
    pub log_likelihood: f64,
}

pub fn fit_geometric_tail(hist: &ContributionHistogram, x_min: u64) -> Result<GeometricTailFit, EstimateError> {
    let n_tail = tail_size(hist, x_min);
    if n_tail == 0 {
        return Err(insufficient_tail(0));
    }
    let excess: u128 = hist
        .tail(x_min)
        .map(|(n, c)| u128::from(n - x_min) * u128::from(c))
        .sum();
    let p = n_tail as f64 / (n_tail as f64 + excess as f64);
    let mut log_likelihood = n_tail as f64 * libm::log(p);
    if excess > 0 {
        log_likelihood += excess as f64 * libm::log1p(-p);
    }
    Ok(GeometricTailFit {
        p,
        x_min,
        n_tail,
        log_likelihood,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelComparison {
    pub powerlaw: PowerLawFit,
    pub geometric: GeometricTailFit,
    /// `(LL_powerlaw - LL_geometric) / n_tail`; positive favours the power law.
    pub llr_per_observation: f64,
}

/// Per-observation log-likelihood ratio beyond which one model is called
/// clearly better, in nats.
pub const DECISIVE_LLR: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    PowerLaw,
    Geometric,
    Inconclusive,
}

impl ModelComparison {
    pub fn verdict(&self) -> Verdict {
        if self.llr_per_observation >= DECISIVE_LLR {
            Verdict::PowerLaw
        } else if self.llr_per_observation <= -DECISIVE_LLR {
            Verdict::Geometric
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Per-observation log-likelihood ratio of the power law against a shifted
/// geometric on the same tail.
pub fn compare_geometric_vs_powerlaw(
    hist: &ContributionHistogram,
    x_min: u64,
) -> Result<ModelComparison, EstimateError> {
    let powerlaw = fit_powerlaw(hist, x_min)?;
    let geometric = fit_geometric_tail(hist, x_min)?;
    let llr_per_observation = (powerlaw.log_likelihood - geometric.log_likelihood) / powerlaw.n_tail as f64;
    Ok(ModelComparison {
        powerlaw,
        geometric,
        llr_per_observation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;

    #[test]
    fn geometric_closed_forms() {
        let h = ContributionHistogram::from_counts([1, 1, 1, 1]);
        assert_eq!(fit_geometric(&h).unwrap(), 1.0);
        let h = ContributionHistogram::from_counts([1, 1, 2]);
        assert_eq!(fit_geometric(&h).unwrap(), 0.75);
        assert!(fit_geometric(&ContributionHistogram::new()).is_err());
    }

    #[test]
    fn powerlaw_formula_on_constant_tail() {
        let mut counts = BTreeMap::new();
        counts.insert(2, 3);
        let h = ContributionHistogram::from_map(counts);
        // The minimum tail size is checked first.
        assert!(matches!(
            fit_powerlaw(&h, 2),
            Err(EstimateError::InsufficientData { got: 3, .. })
        ));
        let fit = fit_powerlaw_with_min_tail(&h, 2, 1).unwrap();
        let expect = 1.0 + 3.0 / (3.0 * libm::log(2.0 / 1.5));
        assert!((fit.alpha - 4.476_059_5).abs() < 1e-7);
        assert!((fit.alpha - expect).abs() < 1e-12);
        assert_eq!(fit.n_tail, 3);
        let h = ContributionHistogram::from_counts(core::iter::repeat(2).take(12));
        assert_eq!(fit_powerlaw(&h, 2).unwrap().alpha, fit.alpha);
    }

    #[test]
    fn loglik_is_maximised_near_alpha_hat() {
        // The closed-form alpha is an approximation of the exact MLE; the
        // exact zeta log-likelihood must not improve much by moving it.
        let counts: alloc::vec::Vec<u64> = (1..=400u64).map(|i| 5 + (i * i) % 97 + i / 3).collect();
        let h = ContributionHistogram::from_counts(counts.iter().copied());
        let fit = fit_powerlaw(&h, 5).unwrap();
        let ll = |alpha: f64| {
            let s: f64 = counts.iter().map(|&n| libm::log(n as f64)).sum();
            -alpha * s - counts.len() as f64 * libm::log(hurwitz_zeta(alpha, 5.0))
        };
        assert!((ll(fit.alpha) - fit.log_likelihood).abs() < 1e-8);
        let best = (0..2000)
            .map(|k| 1.01 + k as f64 * 0.002)
            .map(ll)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(best - fit.log_likelihood < 0.01 * counts.len() as f64);
    }

    #[test]
    fn comparison_needs_a_tail() {
        let h = ContributionHistogram::from_counts([1, 2, 3, 50]);
        assert!(matches!(
            compare_geometric_vs_powerlaw(&h, 50),
            Err(EstimateError::InsufficientData { .. })
        ));
    }

    #[test]
    fn geometric_tail_mle() {
        // Tail {3, 3, 5} with x_min 3: excess 2, p = 3 / 5.
        let h = ContributionHistogram::from_counts([1, 3, 3, 5]);
        let g = fit_geometric_tail(&h, 3).unwrap();
        assert!((g.p - 0.6).abs() < 1e-15);
        let expect = 3.0 * libm::log(0.6) + 2.0 * libm::log(0.4);
        assert!((g.log_likelihood - expect).abs() < 1e-12);
    }
}
