//! Closed-form reference laws: the urn stopping time, the Euler distribution
//! with its q-series, and the inverse-Beta limit of the rescaled chain.

use rand::Rng;
use serde::Serialize;

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::stats::{empirical_law, total_variation};
use crate::stream::{run_trials, SeedSplitter};

/// `(a; q)_k = ∏_{j<k} (1 − a qʲ)`.
pub fn q_pochhammer(a: f64, q: f64, k: usize) -> f64 {
    let mut prod = 1.0;
    let mut aq = a;
    for _ in 0..k {
        prod *= 1.0 - aq;
        aq *= q;
    }
    prod
}

/// Truncated `φ(p) = (p; p)_∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerFunction {
    pub value: f64,
    /// Factors `1 − pᵏ` multiplied, `k = 1..=terms`.
    pub terms: usize,
    /// Bound on the relative error of the dropped factors,
    /// `1 − ∏_{k>terms}(1 − pᵏ) ≤ p^{terms+1}/(1 − p)`.
    pub remainder_bound: f64,
}

pub fn euler_function(p: f64) -> Result<EulerFunction> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("need p in (0,1), got {p}")));
    }
    let mut value = 1.0;
    let mut pk = p;
    let mut terms = 0;
    loop {
        value *= 1.0 - pk;
        terms += 1;
        pk *= p;
        let bound = pk / (1.0 - p);
        if pk < 1e-16 && bound < 1e-16 {
            return Ok(EulerFunction {
                value,
                terms,
                remainder_bound: bound,
            });
        }
    }
}

fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `P[T = n] = (m−1)!·m^{−n}·n/(m−n)!` for `n = 0..=m` (`P[T = 0] = 0`): the
/// first time a red ball is drawn from an urn of `m` balls that starts with
/// one red, each white draw being replaced by a red one.
pub fn naor_exact(m: u64) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("urn needs m >= 2, got {m}")));
    }
    let lm = (m as f64).ln();
    let base = ln_factorial(m - 1);
    Ok((0..=m)
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                (base - n as f64 * lm + (n as f64).ln() - ln_factorial(m - n)).exp()
            }
        })
        .collect())
}

/// `τ_n = (m!/mᵐ)(m − n)m^{n−1}/n!` for `n < m`: the law of `m − T`.
pub fn urn_tau(m: u64) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("urn needs m >= 2, got {m}")));
    }
    let lm = (m as f64).ln();
    let head = ln_factorial(m) - m as f64 * lm;
    Ok((0..m)
        .map(|n| {
            (head + ((m - n) as f64).ln() + (n as f64 - 1.0) * lm - ln_factorial(n)).exp()
        })
        .collect())
}

/// One urn run; returns `T`.
pub fn urn_stopping_time<R: Rng + ?Sized>(m: u64, rng: &mut R) -> u64 {
    for n in 1..m {
        // n red balls at the n-th draw
        if rng.random_range(0..m) < n {
            return n;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UrnLaw {
    pub m: u64,
    pub trials: u64,
    /// `P[T = n]`, index `n`.
    pub exact_t: Vec<f64>,
    /// Law of `m − T` from the closed form.
    pub tau: Vec<f64>,
    /// Empirical law of `m − T`.
    pub empirical: Vec<f64>,
    pub tv_distance: f64,
}

/// Stream label for urn runs.
pub const URN_LABEL: &str = "catalog.naor";

pub fn naor_urn(m: u64, trials: u64, seed: u64, workers: usize) -> Result<UrnLaw> {
    let exact_t = naor_exact(m)?;
    let tau = urn_tau(m)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let splitter = SeedSplitter::new(seed, URN_LABEL);
    let times = run_trials(trials, workers, |i| {
        urn_stopping_time(m, &mut splitter.stream(i))
    });
    let empirical = empirical_law(times.into_iter().map(|t| m - t), m as usize);
    let tv_distance = total_variation(&empirical, &tau);
    Ok(UrnLaw {
        m,
        trials,
        exact_t,
        tau,
        empirical,
        tv_distance,
    })
}

/// `Σ_{n≤k} pⁿ/(p; p)_n`, which tends to `1/(p; p)_∞`.
pub fn euler_series_partial(p: f64, k: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=k {
        term *= p / (1.0 - p.powi(n as i32));
        sum += term;
    }
    sum
}

/// `τ_n = (p; p)_∞·pⁿ/(p; p)_n` for `n = 0..=k`.
///
/// Fails when the first `k + 1` terms carry less than `1 − 1e-10` of the mass.
pub fn euler_distribution(p: f64, k: usize) -> Result<Vec<f64>> {
    let phi = euler_function(p)?.value;
    let mut term = phi;
    let mut tau = vec![phi];
    for n in 1..=k {
        term *= p / (1.0 - p.powi(n as i32));
        tau.push(term);
    }
    let mass: f64 = tau.iter().sum();
    if mass <= 1.0 - 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "{} terms hold only {mass} of the mass; raise K",
            k + 1
        )));
    }
    Ok(tau)
}

/// `yᶜ/(1 + y)ᶜ`.
pub fn inverse_beta_cdf(c: f64, y: f64) -> Result<f64> {
    if !(c > 0.0 && y > 0.0) {
        return Err(Error::InvalidArgument(format!("need c, y > 0, got c={c}, y={y}")));
    }
    Ok((c * (y.ln() - y.ln_1p())).exp())
}

/// `P[X_n ≤ x] = ∏_{j=0}^{n} F(x + j)` for the chain started at `X_0 = Y_0`.
pub fn finite_horizon_cdf(spec: &DistributionSpec, n: u64, x: u64) -> f64 {
    (0..=n).map(|j| spec.ln_cdf(x + j)).sum::<f64>().exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pochhammer_basics() {
        assert_eq!(q_pochhammer(0.3, 0.5, 0), 1.0);
        assert!((q_pochhammer(0.5, 0.5, 2) - 0.5 * 0.75).abs() < 1e-16);
        let phi = euler_function(0.5).unwrap();
        assert!((phi.value - 0.288_788_095_086_602_4).abs() < 1e-14);
        assert!(phi.remainder_bound < 1e-14);
        let direct = q_pochhammer(0.5, 0.5, 60);
        assert!((phi.value - direct).abs() < 1e-15);
    }

    #[test]
    fn urn_m2_uniform() {
        let t = naor_exact(2).unwrap();
        assert!((t[1] - 0.5).abs() < 1e-15 && (t[2] - 0.5).abs() < 1e-15);
        let tau = urn_tau(2).unwrap();
        assert!((tau[0] - 0.5).abs() < 1e-15 && (tau[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn urn_laws_normalize_and_agree() {
        for m in 2..=10 {
            let t = naor_exact(m).unwrap();
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let tau = urn_tau(m).unwrap();
            for k in 0..m as usize {
                assert!((tau[k] - t[m as usize - k]).abs() < 1e-13);
            }
        }
        assert!((naor_exact(200).unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn euler_distribution_sums() {
        for p in [0.3, 0.5, 0.8] {
            let phi = euler_function(p).unwrap().value;
            assert!((phi * euler_series_partial(p, 400) - 1.0).abs() < 1e-12);
            let tau = euler_distribution(p, 400).unwrap();
            assert!((tau.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        assert!(euler_distribution(0.9, 3).is_err());
    }

    #[test]
    fn inverse_beta_limits() {
        assert!((inverse_beta_cdf(1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(inverse_beta_cdf(2.0, 1e6).unwrap() > 1.0 - 1e-5);
        assert!(inverse_beta_cdf(2.0, 1e-6).unwrap() < 1e-11);
        assert!(inverse_beta_cdf(0.0, 1.0).is_err());
    }

    #[test]
    fn finite_horizon_small() {
        let u = DistributionSpec::uniform(3).unwrap();
        assert!((finite_horizon_cdf(&u, 0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((finite_horizon_cdf(&u, 1, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((finite_horizon_cdf(&u, 1, 0) - 2.0 / 9.0).abs() < 1e-15);
    }
}
