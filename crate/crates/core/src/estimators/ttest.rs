use crate::error::EstimateError;
use crate::estimators::special::student_t_cdf;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedTTest {
    pub t_stat: f64,
    /// One-sided p-value for the alternative `mean(x - y) < 0`.
    pub p_value: f64,
    pub dof: f64,
    pub mean_difference: f64,
}

/// Paired t-test of the alternative hypothesis `x < y`.
pub fn paired_t_test_less(x: &[f64], y: &[f64]) -> Result<PairedTTest, EstimateError> {
    if x.len() != y.len() {
        return Err(EstimateError::InvalidInput("paired series must have equal length"));
    }
    let m = x.len();
    if m < 2 {
        return Err(EstimateError::InsufficientData {
            what: "paired t-test",
            needed: 2,
            got: m,
        });
    }
    let d = || x.iter().zip(y).map(|(a, b)| a - b);
    let mean = d().sum::<f64>() / m as f64;
    let ss: f64 = d().map(|v| (v - mean) * (v - mean)).sum();
    let first = x[0] - y[0];
    if ss == 0.0 || d().all(|v| v == first) {
        let mean_sign = if mean > 0.0 {
            1
        } else if mean < 0.0 {
            -1
        } else {
            0
        };
        return Err(EstimateError::DegenerateVariance { mean_sign });
    }
    let sd = libm::sqrt(ss / (m - 1) as f64);
    let t_stat = mean / (sd / libm::sqrt(m as f64));
    let dof = (m - 1) as f64;
    Ok(PairedTTest {
        t_stat,
        p_value: student_t_cdf(t_stat, dof),
        dof,
        mean_difference: mean,
    })
}
