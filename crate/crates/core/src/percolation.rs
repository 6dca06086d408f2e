//! Covering windows with random out-balls, and the ℕ₀ statistics that go
//! with it.
//!
//! Every vertex `x` covers `B_{Y_x}(x)`. A vertex `y` is covered iff its
//! *reach* `z_y = max{Y_x − d(x, y) : d(x, y) < ∞}` is positive. Along any
//! edge `u → y` the reach satisfies `z_y = max(Y_y, max_u z_u − 1)`, so one
//! sweep in topological order decides coverage in `O(|window|·n)`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::exchange::{classify, path_from_draws, step, Recurrence};
use crate::graphs::{Family, GraphWindow};
use crate::stats::{chi_square, mean_var, ChiSquareFit};
use crate::stream::{run_trials, SeedSplitter};

/// One realization of the fountain values on a window and the covered set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverSample {
    /// `Y_v` in vertex-index order.
    pub values: Vec<u64>,
    /// `z_v`, the largest remaining reach arriving at `v` (0 if none).
    pub reach: Vec<u64>,
    pub covered: Vec<bool>,
    /// Upper bound on the probability that coverage from outside the window
    /// was missed; `Some` only on ℤⁿ windows.
    pub truncation_bound: Option<f64>,
}

impl CoverSample {
    /// Uncovered vertices, in index order.
    pub fn uncovered(&self) -> Vec<usize> {
        self.covered
            .iter()
            .enumerate()
            .filter_map(|(v, &c)| (!c).then_some(v))
            .collect()
    }

    /// Number of uncovered observed vertices.
    pub fn uncovered_count(&self, window: &GraphWindow) -> u64 {
        self.uncovered()
            .into_iter()
            .filter(|&v| window.is_observed(v))
            .count() as u64
    }

    /// True if an uncovered observed vertex sits within distance 1 of the
    /// far boundary.
    pub fn censored(&self, window: &GraphWindow) -> bool {
        self.uncovered()
            .into_iter()
            .any(|v| window.is_observed(v) && window.near_far_boundary(v))
    }
}

/// Reach of every vertex, drawing `Y_v` from `draw` in increasing `v`.
fn sweep(window: &GraphWindow, mut draw: impl FnMut(usize) -> u64) -> Vec<u64> {
    let n = window.len();
    let mut reach = vec![0u64; n];
    match window.family() {
        Family::DirectedTree { arity, depth } => {
            // preorder DFS; siblings share the same stack entry content
            let mut stack: Vec<(usize, Option<u64>)> = vec![(0, None)];
            let mut next = 0usize;
            while let Some((d, parent)) = stack.pop() {
                let v = next;
                next += 1;
                let y = draw(v);
                let z = match parent {
                    None => y,
                    Some(pz) => step(pz, y),
                };
                reach[v] = z;
                if d < depth {
                    stack.extend(std::iter::repeat_n((d + 1, Some(z)), arity));
                }
            }
        }
        Family::NaturalLattice { dim, .. } | Family::IntegerLattice { dim, .. } => {
            let extent = window.extent();
            let strides: Vec<usize> = (0..dim).map(|i| extent.pow((dim - 1 - i) as u32)).collect();
            let mut offset = vec![0usize; dim];
            for v in 0..n {
                let mut z = draw(v);
                for (axis, &o) in offset.iter().enumerate() {
                    if o > 0 {
                        z = z.max(reach[v - strides[axis]].saturating_sub(1));
                    }
                }
                reach[v] = z;
                for o in offset.iter_mut().rev() {
                    *o += 1;
                    if *o < extent {
                        break;
                    }
                    *o = 0;
                }
            }
        }
    }
    reach
}

/// Coverage for given fountain values (one per vertex, index order).
pub fn cover_from_values(window: &GraphWindow, values: Vec<u64>) -> Result<CoverSample> {
    if values.len() != window.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for a window of {} vertices",
            values.len(),
            window.len()
        )));
    }
    let reach = sweep(window, |v| values[v]);
    let covered = reach.iter().map(|&z| z > 0).collect();
    Ok(CoverSample {
        values,
        reach,
        covered,
        truncation_bound: None,
    })
}

/// Draws `Y_v ~ μ` for every vertex in index order and covers the window.
///
/// Exact on ℕ₀ⁿ and 𝒟ₙ windows. On ℤⁿ windows the result is exact
/// conditional on no coverage from outside the window and carries
/// [`z_truncation_bound`]; when that bound is infinite (the lattice is
/// covered almost surely) the call is refused.
pub fn sample_cover<R: Rng + ?Sized>(
    window: &GraphWindow,
    spec: &DistributionSpec,
    rng: &mut R,
) -> Result<CoverSample> {
    let truncation_bound = integer_guard(window, spec)?;
    let values: Vec<u64> = (0..window.len()).map(|_| spec.sample(rng)).collect();
    let mut sample = cover_from_values(window, values)?;
    sample.truncation_bound = truncation_bound;
    Ok(sample)
}

fn integer_guard(window: &GraphWindow, spec: &DistributionSpec) -> Result<Option<f64>> {
    match window.family() {
        Family::IntegerLattice { dim, .. } => {
            let bound = z_truncation_bound(window, spec)?;
            if bound.is_infinite() {
                return Err(Error::CoveredAlmostSurely { dim });
            }
            Ok(Some(bound))
        }
        _ => Ok(None),
    }
}

/// Checks `V_μ(ℕ₀) ∩ [0, n] = {k ≤ n : X_k > 0}` for the given draws, with the
/// left side from the window sweep and the right side from the chain.
pub fn coupling_check_values(draws: &[u64]) -> Result<()> {
    if draws.is_empty() {
        return Ok(());
    }
    let window = GraphWindow::natural(1, draws.len())?;
    let sample = cover_from_values(&window, draws.to_vec())?;
    let states = path_from_draws(draws);
    for (site, (&covered, &x)) in sample.covered.iter().zip(&states).enumerate() {
        if covered != (x > 0) {
            return Err(Error::CouplingMismatch {
                site,
                covered,
                chain_state: x,
            });
        }
    }
    Ok(())
}

/// Draws `Y_0, …, Y_n` and runs [`coupling_check_values`].
pub fn coupling_check<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    n: usize,
    rng: &mut R,
) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("coupling_check needs n >= 1".into()));
    }
    let draws: Vec<u64> = (0..=n).map(|_| spec.sample(rng)).collect();
    coupling_check_values(&draws)
}

/// `q_m = P[m uncovered in ℕ₀] = ∏_{j=0}^m F(j)` for `m = 0..=m_max`.
pub fn q_sequence(spec: &DistributionSpec, m_max: usize) -> Vec<f64> {
    let mut log = 0.0;
    (0..=m_max as u64)
        .map(|m| {
            log += spec.ln_cdf(m);
            log.exp()
        })
        .collect()
}

/// `E[#V_μ^c(ℕ₀)] = Σ_m q_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineExpectation {
    /// Estimate of the full series; `∞` unless the chain is transient.
    pub value: f64,
    pub converged: bool,
    /// `Σ_{m ≤ m_max} q_m`.
    pub partial_sum: f64,
    /// Estimated `Σ_{m > m_max} q_m`; `q_m ~ C m^{−c}` under a power tail,
    /// giving `≈ q_{m_max}·m_max/(c−1)`.
    pub remainder_estimate: f64,
}

pub fn expected_uncovered_line(spec: &DistributionSpec, m_max: usize) -> LineExpectation {
    let q = q_sequence(spec, m_max);
    let partial_sum: f64 = q.iter().sum();
    if classify(spec) != Recurrence::Transient {
        return LineExpectation {
            value: f64::INFINITY,
            converged: false,
            partial_sum,
            remainder_estimate: f64::INFINITY,
        };
    }
    let remainder_estimate = match spec.tail_model() {
        crate::dist::TailModel::Power { c } => q[m_max] * m_max as f64 / (c - 1.0),
        _ => 0.0,
    };
    LineExpectation {
        value: partial_sum + remainder_estimate,
        converged: true,
        partial_sum,
        remainder_estimate,
    }
}

/// Parameters of an uncovered-set census.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusConfig {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; 0 picks the rayon default.
    pub workers: usize,
    /// Also count clusters of covered and uncovered vertices.
    pub clusters: bool,
}

/// Outcome of a single census trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub uncovered: u64,
    pub censored: bool,
    pub components: Option<ComponentCounts>,
}

/// Fit of the uncovered count on ℕ₀ to `P[k] = p̂(1 − p̂)^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometricFit {
    /// Empirical `P[no uncovered vertex]`.
    pub p_hat: f64,
    pub chi_square: ChiSquareFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncoveredStats {
    pub trials: u64,
    pub outcomes: Vec<TrialOutcome>,
    pub mean: f64,
    pub variance: f64,
    /// `(count, trials with that count)`, ascending.
    pub histogram: Vec<(u64, u64)>,
    pub censored_fraction: f64,
    pub geometric_fit: Option<GeometricFit>,
    pub truncation_bound: Option<f64>,
}

impl UncoveredStats {
    /// Standard error of `mean`.
    pub fn stderr(&self) -> f64 {
        (self.variance / self.trials as f64).sqrt()
    }
}

/// Stream label used for census trials.
pub const CENSUS_LABEL: &str = "perc.census";

/// Counts uncovered observed vertices over independent trials.
///
/// Trial `i` draws from stream `i` of the master seed, and ℕ₀¹ windows run
/// the exchange-chain recursion directly without materializing the window.
pub fn uncovered_census(
    window: &GraphWindow,
    spec: &DistributionSpec,
    config: &CensusConfig,
) -> Result<UncoveredStats> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("census needs at least one trial".into()));
    }
    let truncation_bound = integer_guard(window, spec)?;
    let splitter = SeedSplitter::new(config.seed, CENSUS_LABEL);
    let line = matches!(window.family(), Family::NaturalLattice { dim: 1, .. }) && !config.clusters;
    let outcomes = run_trials(config.trials, config.workers, |i| {
        let mut rng = splitter.stream(i);
        if line {
            line_trial(window.len(), spec, &mut rng)
        } else {
            let reach = sweep(window, |_| spec.sample(&mut rng));
            let covered: Vec<bool> = reach.iter().map(|&z| z > 0).collect();
            let mut uncovered = 0;
            let mut censored = false;
            for (v, &c) in covered.iter().enumerate() {
                if !c && window.is_observed(v) {
                    uncovered += 1;
                    censored |= window.near_far_boundary(v);
                }
            }
            let components = config.clusters.then(|| component_counts(window, &covered));
            TrialOutcome {
                uncovered,
                censored,
                components,
            }
        }
    });
    Ok(summarize(window, outcomes, truncation_bound))
}

fn line_trial<R: Rng + ?Sized>(len: usize, spec: &DistributionSpec, rng: &mut R) -> TrialOutcome {
    let mut z = 0;
    let mut uncovered = 0;
    let mut censored = false;
    for m in 0..len {
        z = step(z, spec.sample(rng));
        if z == 0 {
            uncovered += 1;
            censored |= m + 2 >= len;
        }
    }
    TrialOutcome {
        uncovered,
        censored,
        components: None,
    }
}

fn summarize(
    window: &GraphWindow,
    outcomes: Vec<TrialOutcome>,
    truncation_bound: Option<f64>,
) -> UncoveredStats {
    let trials = outcomes.len() as u64;
    let counts: Vec<f64> = outcomes.iter().map(|o| o.uncovered as f64).collect();
    let (mean, variance) = mean_var(&counts);
    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    for o in &outcomes {
        *hist.entry(o.uncovered).or_default() += 1;
    }
    let censored = outcomes.iter().filter(|o| o.censored).count();
    let geometric_fit = matches!(window.family(), Family::NaturalLattice { dim: 1, .. })
        .then(|| geometric_fit(&hist, trials))
        .flatten();
    UncoveredStats {
        trials,
        outcomes,
        mean,
        variance,
        histogram: hist.into_iter().collect(),
        censored_fraction: censored as f64 / trials as f64,
        geometric_fit,
        truncation_bound,
    }
}

fn geometric_fit(hist: &BTreeMap<u64, u64>, trials: u64) -> Option<GeometricFit> {
    let zeros = hist.get(&0).copied().unwrap_or(0);
    let p_hat = zeros as f64 / trials as f64;
    if p_hat <= 0.0 || p_hat >= 1.0 {
        return None;
    }
    let max = *hist.keys().next_back()?;
    let observed: Vec<u64> = (0..=max).map(|k| hist.get(&k).copied().unwrap_or(0)).collect();
    let probs: Vec<f64> = (0..=max)
        .map(|k| p_hat * (1.0 - p_hat).powi(k as i32))
        .collect();
    Some(GeometricFit {
        p_hat,
        chi_square: chi_square(&observed, &probs, 1),
    })
}

/// Number of clusters among covered and among uncovered vertices. Two
/// vertices of the same status share a cluster when an edge path through
/// vertices of that status joins them (edge direction ignored).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComponentCounts {
    pub covered: u64,
    pub uncovered: u64,
}

pub fn component_counts(window: &GraphWindow, covered: &[bool]) -> ComponentCounts {
    let n = window.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut join = |a: usize, b: usize| {
        if covered[a] == covered[b] && window.is_observed(a) && window.is_observed(b) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    };
    match window.family() {
        Family::DirectedTree { arity, depth } => {
            let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
            while let Some((v, d)) = stack.pop() {
                if d == depth {
                    continue;
                }
                let child_size = subtree_size(arity, depth - d - 1).unwrap_or(1);
                for j in 0..arity {
                    let c = v + 1 + j * child_size;
                    join(v, c);
                    stack.push((c, d + 1));
                }
            }
        }
        Family::NaturalLattice { dim, .. } | Family::IntegerLattice { dim, .. } => {
            let extent = window.extent();
            for v in 0..n {
                let mut r = v;
                let mut stride = 1;
                for _ in 0..dim {
                    if r % extent + 1 < extent {
                        join(v, v + stride);
                    }
                    r /= extent;
                    stride *= extent;
                }
            }
        }
    }
    let mut counts = ComponentCounts {
        covered: 0,
        uncovered: 0,
    };
    for v in 0..n {
        if find(&mut parent, v) == v && window.is_observed(v) {
            if covered[v] {
                counts.covered += 1;
            } else {
                counts.uncovered += 1;
            }
        }
    }
    counts
}

fn subtree_size(arity: usize, height: usize) -> Option<usize> {
    let mut size = 1usize;
    for _ in 0..height {
        size = size.checked_mul(arity)?.checked_add(1)?;
    }
    Some(size)
}

/// Union bound on the probability that a vertex outside a ℤⁿ window covers
/// some observed vertex.
///
/// An outside vertex `x` reaches the observed box first at its clamp
/// `max(x, 0)`, at distance `k` = the sum of its negative parts, and covers
/// something there iff `Y_x > k`. Counting outside vertices by `k ≥ margin+1`
/// and by the number `j` of negative coordinates gives
/// `Σ_k T(k) Σ_{j=1}^n C(n,j)·sideⁿ⁻ʲ·C(k−1, j−1)`.
///
/// Returns `∞` when the n-th moment of μ diverges: then ℤⁿ is covered almost
/// surely and no finite window describes it.
pub fn z_truncation_bound(window: &GraphWindow, spec: &DistributionSpec) -> Result<f64> {
    let Family::IntegerLattice { dim, side, margin } = window.family() else {
        return Err(Error::InvalidArgument(
            "truncation bound is defined for Z^n windows only".into(),
        ));
    };
    if spec.moment_diverges(dim as u32) {
        return Ok(f64::INFINITY);
    }
    let binom = |n: u64, k: u64| -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let weight = |k: u64| -> f64 {
        (1..=dim as u64)
            .map(|j| {
                binom(dim as u64, j)
                    * (side as f64).powi((dim as u64 - j) as i32)
                    * binom(k - 1, j - 1)
            })
            .sum()
    };
    let mut sum = 0.0;
    let start = margin as u64 + 1;
    let stop = spec.support_max().unwrap_or(u64::MAX);
    let mut k = start;
    while k < stop {
        let t = spec.tail(k);
        if t == 0.0 {
            break;
        }
        let term = t * weight(k);
        sum += term;
        if k > start + 64 && term < 1e-18 * sum {
            break;
        }
        if k - start > 10_000_000 {
            return Err(Error::NonConvergence {
                iterations: 10_000_000,
                estimate: sum,
                residual: term,
            });
        }
        k += 1;
    }
    Ok(sum)
}

/// Whether ℤⁿ is covered almost surely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageVerdict {
    CoveredAlmostSurely,
    NotCoveredAlmostSurely,
}

/// `V_μ(ℤⁿ) = ℤⁿ` almost surely iff the n-th moment of μ diverges.
pub fn coverage_criterion(spec: &DistributionSpec, dim: usize) -> Result<CoverageVerdict> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    Ok(if spec.moment_diverges(dim as u32) {
        CoverageVerdict::CoveredAlmostSurely
    } else {
        CoverageVerdict::NotCoveredAlmostSurely
    })
}
