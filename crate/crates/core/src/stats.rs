//! Small statistical helpers for comparing Monte Carlo output with exact laws.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Total-variation distance `½ Σ |p_i − q_i|`; missing entries count as 0.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

/// Normalized histogram of `values` over `0..len`; values past the end are
/// dropped from the bins but still count towards the total.
pub fn empirical_law(values: impl IntoIterator<Item = u64>, len: usize) -> Vec<f64> {
    let mut counts = vec![0u64; len];
    let mut total = 0u64;
    for v in values {
        total += 1;
        if let Some(c) = counts.get_mut(v as usize) {
            *c += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| c as f64 / total.max(1) as f64)
        .collect()
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Standard deviation of a binomial frequency estimate.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Outcome of a χ² goodness-of-fit test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

impl ChiSquareFit {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// χ² test of observed counts against expected probabilities.
///
/// Bins are merged left to right until each carries an expected count of at
/// least 5; the remainder of the expected mass (`1 − Σ probs`) is appended as
/// a final tail bin together with any observations not covered by `observed`.
/// `fitted_params` reduces the degrees of freedom.
pub fn chi_square(observed: &[u64], probs: &[f64], fitted_params: usize) -> ChiSquareFit {
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (i, &p) in probs.iter().enumerate() {
        o_acc += observed.get(i).copied().unwrap_or(0) as f64;
        e_acc += p * n;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    let covered: f64 = probs.iter().sum();
    let extra_obs: u64 = observed.iter().skip(probs.len()).sum();
    o_acc += extra_obs as f64;
    e_acc += (1.0 - covered).max(0.0) * n;
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) if e_acc < 5.0 => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            _ => cells.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = cells
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let bins = cells.len();
    let dof = bins.saturating_sub(1 + fitted_params).max(1);
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| 1.0 - d.cdf(statistic))
        .unwrap_or(f64::NAN);
    ChiSquareFit {
        statistic,
        dof,
        p_value,
        bins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_distance() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!((total_variation(&[1.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let fit = chi_square(&[250, 250, 500], &[0.25, 0.25, 0.5], 0);
        assert_eq!(fit.statistic, 0.0);
        assert!(fit.passes(0.001));
        assert_eq!(fit.dof, 2);
    }

    #[test]
    fn chi_square_rejects_bad_fit() {
        let fit = chi_square(&[900, 100], &[0.5, 0.5], 0);
        assert!(!fit.passes(0.001));
    }

    #[test]
    fn chi_square_pools_small_bins() {
        let fit = chi_square(&[990, 9, 1], &[0.99, 0.009, 0.001], 0);
        assert_eq!(fit.bins, 2);
    }

    #[test]
    fn mean_var_basic() {
        let (m, v) = mean_var(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(v, 1.0);
    }
}
