//! The constant-decrement random exchange process `X_{n+1} = max(X_n − 1, Y_{n+1})`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{DistributionSpec, SeriesVerdict};
use crate::error::{Error, Result};
use crate::spectral::{perron_root, DenseMatrix, PerronEstimate};
use crate::stream::{run_trials, SeedSplitter};

/// Largest `ln τ_x` accepted before reporting saturation.
const LN_SATURATION: f64 = 700.0;

/// One step of the chain. At `x = 0` the decrement is absorbed: `max(−1, y) = y`.
pub fn step(x: u64, y: u64) -> u64 {
    x.saturating_sub(1).max(y)
}

/// A simulated path together with the draws that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExchangePath {
    /// `Y_0, …, Y_n`.
    pub draws: Vec<u64>,
    /// `X_0, …, X_n`.
    pub states: Vec<u64>,
}

/// `X_0 = Y_0`, then `X_{k+1} = step(X_k, Y_{k+1})`.
pub fn path_from_draws(draws: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(draws.len());
    let mut x = 0;
    for (k, &y) in draws.iter().enumerate() {
        x = if k == 0 { y } else { step(x, y) };
        out.push(x);
    }
    out
}

/// Simulates `n_steps` transitions, i.e. `X_0, …, X_{n_steps}`.
pub fn simulate_path<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    n_steps: usize,
    rng: &mut R,
) -> Result<ExchangePath> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("simulate_path needs n_steps >= 1".into()));
    }
    let draws: Vec<u64> = (0..=n_steps).map(|_| spec.sample(rng)).collect();
    let states = path_from_draws(&draws);
    Ok(ExchangePath { draws, states })
}

/// Stream label used by [`final_states`].
pub const FINAL_STATE_LABEL: &str = "exchange.final_state";

/// `X_n` of `trials` independent paths; path `i` uses stream `i`.
pub fn final_states(spec: &DistributionSpec, n: u64, trials: u64, seed: u64, workers: usize) -> Vec<u64> {
    let splitter = SeedSplitter::new(seed, FINAL_STATE_LABEL);
    run_trials(trials, workers, |i| {
        let mut rng = splitter.stream(i);
        let mut x = spec.sample(&mut rng);
        for _ in 0..n {
            x = step(x, spec.sample(&mut rng));
        }
        x
    })
}

/// Default truncation: the full state space for finite support, otherwise
/// `max(64, K + 32)`.
pub fn default_truncation(spec: &DistributionSpec) -> usize {
    match spec.support_max() {
        Some(n0) => n0 as usize + 1,
        None => 64.max(spec.onset() + 32),
    }
}

/// A leading principal block of the transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionMatrix {
    pub matrix: DenseMatrix,
    /// True when the block is the whole matrix (finite support, `size > n_0`).
    pub exact: bool,
}

impl TransitionMatrix {
    pub fn size(&self) -> usize {
        self.matrix.dim()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.matrix.get(x, y)
    }
}

/// Transition probabilities `P_{x,y}` for `x, y < size`:
/// `μ_y` for `y ≥ x`, `F(x−1)` for `y = x − 1`, 0 below.
///
/// For finite support the block is capped at the state space `{0, …, n_0}`.
pub fn transition_matrix(spec: &DistributionSpec, size: usize) -> Result<TransitionMatrix> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!(
            "transition matrix needs size >= 2, got {size}"
        )));
    }
    let (dim, exact) = match spec.support_max() {
        Some(n0) => (size.min(n0 as usize + 1), size > n0 as usize),
        None => (size, false),
    };
    let matrix = DenseMatrix::from_fn(dim, |x, y| transition_entry(spec, x as u64, y as u64));
    Ok(TransitionMatrix { matrix, exact })
}

pub(crate) fn transition_entry(spec: &DistributionSpec, x: u64, y: u64) -> f64 {
    if y >= x {
        spec.pmf(y)
    } else if y + 1 == x {
        spec.cdf(x - 1)
    } else {
        0.0
    }
}

/// Invariant measure from the product formula, `τ_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryMeasure {
    /// `τ_0, …, τ_K` with `τ_0 = 1`.
    pub unnormalized: Vec<f64>,
    /// `Σ_x τ_x` over the whole state space, when finite.
    pub normalizing_constant: Option<f64>,
    /// `τ_x / Σ τ` for `x ≤ K`, present iff μ has a finite mean.
    pub normalized: Option<Vec<f64>>,
}

impl StationaryMeasure {
    pub fn is_normalizable(&self) -> bool {
        self.normalized.is_some()
    }
}

/// `ln τ_x − ln τ_0 = ln T(x−1) − Σ_{y<x} ln F(y)` for `x = 0, 1, …`.
struct LogTau<'a> {
    spec: &'a DistributionSpec,
    x: u64,
    log_prod: f64,
}

impl Iterator for LogTau<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let x = self.x;
        let value = if x == 0 {
            0.0
        } else {
            self.log_prod += self.spec.ln_cdf(x - 1);
            self.spec.tail(x - 1).ln() - self.log_prod
        };
        self.x += 1;
        Some(value)
    }
}

fn log_tau(spec: &DistributionSpec) -> LogTau<'_> {
    LogTau {
        spec,
        x: 0,
        log_prod: 0.0,
    }
}

/// `τ_x = τ_0 · T(x−1) / ∏_{y<x} F(y)` for `x ≤ k`, evaluated in log space.
///
/// For finite support `k` is capped at `n_0`. The normalizing constant is
/// summed over the whole state space: exactly for finite support, to
/// negligible remainder for a geometric tail. Power tails have infinite mean
/// and no normalization.
pub fn stationary_measure(spec: &DistributionSpec, k: usize) -> Result<StationaryMeasure> {
    if k < 1 {
        return Err(Error::InvalidArgument("stationary_measure needs K >= 1".into()));
    }
    let k = match spec.support_max() {
        Some(n0) => k.min(n0 as usize),
        None => k,
    };
    let mut unnormalized = Vec::with_capacity(k + 1);
    for (x, lt) in log_tau(spec).take(k + 1).enumerate() {
        if lt > LN_SATURATION {
            return Err(Error::Saturation {
                last_safe: x.saturating_sub(1),
            });
        }
        unnormalized.push(lt.exp());
    }
    let normalizing_constant = if spec.mean().is_some() {
        Some(normalizer(spec)?)
    } else {
        None
    };
    let normalized = normalizing_constant.map(|z| unnormalized.iter().map(|t| t / z).collect());
    Ok(StationaryMeasure {
        unnormalized,
        normalizing_constant,
        normalized,
    })
}

fn normalizer(spec: &DistributionSpec) -> Result<f64> {
    if let Some(n0) = spec.support_max() {
        return Ok(log_tau(spec).take(n0 as usize + 1).map(f64::exp).sum());
    }
    let onset = spec.onset();
    let mut sum = 0.0;
    for (x, lt) in log_tau(spec).enumerate().take(10_000_000) {
        if lt > LN_SATURATION {
            return Err(Error::Saturation {
                last_safe: x.saturating_sub(1),
            });
        }
        let term = lt.exp();
        sum += term;
        if x > onset && term < 1e-18 * sum {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        iterations: 10_000_000,
        estimate: sum,
        residual: f64::NAN,
    })
}

/// Largest residual of `τ_x = (Σ_{z≤x} τ_z) μ_x + τ_{x+1} F(x)` over the
/// supplied range, relative to `max(τ_x, 1e-300)`.
pub fn recursion_residual(spec: &DistributionSpec, tau: &[f64]) -> f64 {
    let mut prefix = 0.0;
    let mut worst: f64 = 0.0;
    for x in 0..tau.len().saturating_sub(1) {
        prefix += tau[x];
        let rhs = prefix * spec.pmf(x as u64) + tau[x + 1] * spec.cdf(x as u64);
        worst = worst.max((tau[x] - rhs).abs() / tau[x].max(1e-300));
    }
    worst
}

/// `Σ_{n=0}^{N} P^n_{x,y} zⁿ` from truncated matrix powers.
///
/// A path from `x` to `y` in at most `N` steps never rises above `y + N`
/// (the chain falls by at most one per step), so a truncation with
/// `size > max(x, y + N)` yields the exact partial sum. Finite support with
/// `size > n_0` is exact for any `N`.
pub fn green_partial(
    spec: &DistributionSpec,
    x: usize,
    y: usize,
    z: f64,
    n: usize,
    size: usize,
) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidArgument(format!("green_partial needs z > 0, got {z}")));
    }
    let full = spec.support_max().map(|n0| n0 as usize + 1);
    let exact = match full {
        Some(states) => x < states && y < states && size >= states,
        None => size > x.max(y + n),
    };
    if !exact {
        return Err(Error::InvalidArgument(format!(
            "truncation size {size} is too small for exact powers from {x} to {y} in {n} steps"
        )));
    }
    let p = transition_matrix(spec, size.max(2))?;
    let mut v = vec![0.0; p.size()];
    v[x] = 1.0;
    let mut acc = v[y];
    let mut zn = 1.0;
    for _ in 0..n {
        v = p.matrix.vec_mul(&v);
        zn *= z;
        acc += zn * v[y];
    }
    Ok(acc)
}

/// Perron root of the `size` truncation of `P`.
///
/// Nondecreasing in `size`; equals `ρ(P)` when the truncation is exact.
pub fn spectral_radius(spec: &DistributionSpec, size: usize, tol: f64) -> Result<PerronEstimate> {
    let p = transition_matrix(spec, size)?;
    perron_root(&p.matrix, tol)
}

/// Recurrence class of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recurrence {
    PositiveRecurrent,
    NullRecurrent,
    Transient,
}

/// Positive recurrent iff μ has finite mean; transient iff
/// `Σ_m ∏_{k=1}^m F(k−1) < ∞`; null recurrent otherwise.
pub fn classify(spec: &DistributionSpec) -> Recurrence {
    if spec.mean().is_some() {
        Recurrence::PositiveRecurrent
    } else if spec.kesten_verdict() == SeriesVerdict::Converges {
        Recurrence::Transient
    } else {
        Recurrence::NullRecurrent
    }
}
