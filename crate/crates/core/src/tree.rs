//! The directed n-ary tree: depth-uncovered probabilities, the mean matrix of
//! the reach branching process, and its simulation.
//!
//! A covered vertex carries a type, its reach `z ≥ 1`. A child of a type-`x`
//! vertex has reach `max(x − 1, Y)` and is itself covered iff that is
//! positive. Type-`x` parents thus produce `n` children with law given by row
//! `x` of the transition matrix restricted to `{1, 2, …}`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::exchange::{step, transition_matrix};
use crate::spectral::{perron_root, DenseMatrix, PerronEstimate};
use crate::stream::{run_trials, SeedSplitter};

/// `r_m = P[some vertex at depth m is uncovered]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RSequence {
    pub arity: usize,
    pub values: Vec<f64>,
    /// `ln(1 − r_m)`; carries the precision once `r_m` is close to 1.
    pub log_complement: Vec<f64>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Iterates `r_{m+1} = (1 − (1 − r_m)ⁿ)·F(m+1)` from `r_0 = μ_0`.
///
/// The state is `s = ln(1 − r)`, updated as
/// `s' = ln(T(m+1) + F(m+1)·e^{n s})`. When `T(m+1) = 0` this is exactly
/// `s' = n·s`.
pub fn r_recurrence(spec: &DistributionSpec, arity: usize, m_max: usize) -> Result<RSequence> {
    if arity < 2 {
        return Err(Error::InvalidArgument(format!("arity must be >= 2, got {arity}")));
    }
    if m_max < 1 {
        return Err(Error::InvalidArgument("m_max must be >= 1".into()));
    }
    let n = arity as f64;
    let mut s = spec.tail(0).ln();
    let mut log_complement = vec![s];
    for m in 1..=m_max as u64 {
        let ln_t = spec.tail(m).ln();
        let ln_f = spec.ln_cdf(m);
        s = log_add(ln_t, ln_f + n * s);
        log_complement.push(s);
    }
    let values = log_complement.iter().map(|s| -s.exp_m1()).collect();
    Ok(RSequence {
        arity,
        values,
        log_complement,
    })
}

/// Nonzero fixed point `2 − 1/F` of `x ↦ x(2 − x)F`, binary tree only.
pub fn fixed_point(f_n: f64, arity: usize) -> Result<f64> {
    if arity != 2 {
        return Err(Error::InvalidArgument(format!(
            "closed-form fixed point needs arity 2, got {arity}; use fixed_point_numeric"
        )));
    }
    if !(f_n > 0.5 && f_n <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 1/2 < F <= 1 for a positive fixed point, got {f_n}"
        )));
    }
    Ok(2.0 - 1.0 / f_n)
}

/// Nonzero fixed point of `x ↦ (1 − (1 − x)ⁿ)F` by bisection. It exists iff
/// `nF > 1`.
pub fn fixed_point_numeric(f_n: f64, arity: usize) -> Result<f64> {
    if arity < 2 {
        return Err(Error::InvalidArgument(format!("arity must be >= 2, got {arity}")));
    }
    if !(f_n * arity as f64 > 1.0 && f_n <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "no positive fixed point for F = {f_n}, n = {arity}"
        )));
    }
    if f_n == 1.0 {
        return Ok(1.0);
    }
    let g = |x: f64| (1.0 - (1.0 - x).powi(arity as i32)) * f_n - x;
    let (mut lo, mut hi) = (1e-12, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `r_m = 1 − exp(−c·2ᵐ)` for the binary tree and finite support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticFit {
    pub c: f64,
    /// Largest support point; the closed form holds for `m ≥ n_0`.
    pub n0: u64,
    pub values: Vec<f64>,
    pub log_complement: Vec<f64>,
}

pub fn logistic_closed_form(spec: &DistributionSpec, m_max: usize) -> Result<LogisticFit> {
    let Some(n0) = spec.support_max() else {
        return Err(Error::InvalidDistribution(
            "closed form needs finite support".into(),
        ));
    };
    let seq = r_recurrence(spec, 2, m_max.max(n0 as usize).max(1))?;
    let anchor = seq.log_complement[n0 as usize];
    let c = -anchor / 2f64.powi(n0 as i32);
    let log_complement: Vec<f64> = (0..=m_max as i32).map(|m| -c * 2f64.powi(m)).collect();
    let values = log_complement.iter().map(|s| -s.exp_m1()).collect();
    Ok(LogisticFit {
        c,
        n0,
        values,
        log_complement,
    })
}

/// Transition block over the types `{1, …, size}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanMatrix {
    pub matrix: DenseMatrix,
    /// True when the block is the whole matrix (finite support, `size ≥ n_0`).
    pub exact: bool,
}

pub fn mean_matrix(spec: &DistributionSpec, size: usize) -> Result<MeanMatrix> {
    if size < 1 {
        return Err(Error::InvalidArgument("mean matrix needs size >= 1".into()));
    }
    let p = transition_matrix(spec, size + 1)?;
    Ok(MeanMatrix {
        matrix: p.matrix.drop_first(),
        exact: p.exact,
    })
}

/// Perron root of the mean-matrix block. Nondecreasing in `size`.
pub fn rho_m(spec: &DistributionSpec, size: usize, tol: f64) -> Result<PerronEstimate> {
    perron_root(&mean_matrix(spec, size)?.matrix, tol)
}

/// Characteristic polynomial of the mean matrix for `μ_0 = 1 − p`, `μ_n = p`,
/// by `χ_k = z·χ_{k−1} − p(1 − p)^{k−1}`, `χ_1 = z − p`.
pub fn char_poly(n: usize, p: f64, z: f64) -> f64 {
    let mut chi = z - p;
    let mut w = p;
    for _ in 2..=n {
        w *= 1.0 - p;
        chi = z * chi - w;
    }
    chi
}

/// `(p(1−p)ⁿ + (z−1)zⁿ)/(p + z − 1)`; `None` at the removable pole `z = 1 − p`.
pub fn char_poly_closed_form(n: usize, p: f64, z: f64) -> Option<f64> {
    let den = p + z - 1.0;
    if den == 0.0 {
        return None;
    }
    Some((p * (1.0 - p).powi(n as i32) + (z - 1.0) * z.powi(n as i32)) / den)
}

/// Largest root of [`char_poly`] in `(0, 1)`, by a downward scan from 1 and
/// bisection.
pub fn char_poly_largest_root(n: usize, p: f64) -> Result<f64> {
    if n < 1 || !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("need n >= 1 and p in (0,1), got n={n}, p={p}")));
    }
    const GRID: usize = 1 << 14;
    let f = |z: f64| char_poly(n, p, z);
    let mut hi = 1.0;
    let mut f_hi = f(hi);
    for k in (0..GRID).rev() {
        let lo = k as f64 / GRID as f64;
        let f_lo = f(lo);
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if (f_lo < 0.0) != (f_hi < 0.0) {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if (f(mid) < 0.0) == (f_lo < 0.0) {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        hi = lo;
        f_hi = f_lo;
    }
    Err(Error::NonConvergence {
        iterations: GRID,
        estimate: f64::NAN,
        residual: f(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathVerdict {
    InfinitePath,
    NoInfinitePath,
    /// `|ρ − 1/n| ≤ tol`.
    Indeterminate,
}

impl PathVerdict {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            PathVerdict::InfinitePath => Some(true),
            PathVerdict::NoInfinitePath => Some(false),
            PathVerdict::Indeterminate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub rho: f64,
    pub threshold: f64,
    pub verdict: PathVerdict,
    pub size: usize,
    /// The block was the full matrix, or the truncated ρ already clears the
    /// threshold (it can only grow with `size`).
    pub certified: bool,
}

/// Whether the covered set of the n-ary tree contains an infinite path a.s.,
/// decided by `ρ(M)` against `1/n`.
pub fn infinite_path_criterion(
    spec: &DistributionSpec,
    arity: usize,
    size: usize,
    tol: f64,
) -> Result<CriterionReport> {
    if arity < 2 {
        return Err(Error::InvalidArgument(format!("arity must be >= 2, got {arity}")));
    }
    let m = mean_matrix(spec, size)?;
    let est = perron_root(&m.matrix, (tol * 1e-3).max(1e-15))?;
    let threshold = 1.0 / arity as f64;
    let verdict = if est.value > threshold + tol {
        PathVerdict::InfinitePath
    } else if est.value < threshold - tol {
        PathVerdict::NoInfinitePath
    } else {
        PathVerdict::Indeterminate
    };
    Ok(CriterionReport {
        rho: est.value,
        threshold,
        verdict,
        size: m.matrix.dim(),
        certified: m.exact || verdict == PathVerdict::InfinitePath,
    })
}

/// One run of the reach branching process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchingRun {
    /// Per generation, `(type, count)` ascending by type.
    pub generations: Vec<Vec<(u64, u64)>>,
    /// First empty generation.
    pub extinct_at: Option<usize>,
    /// Stopped because the population passed the cap.
    pub saturated: bool,
    /// For types `1..=tracked`: no individual of that type in the trailing
    /// quarter of the generations run.
    pub local_extinct: Vec<bool>,
}

impl BranchingRun {
    pub fn survived(&self) -> bool {
        self.saturated || self.extinct_at.is_none()
    }

    pub fn totals(&self) -> Vec<u64> {
        self.generations
            .iter()
            .map(|g| g.iter().map(|(_, c)| c).sum())
            .collect()
    }
}

/// Default population cap.
pub const DEFAULT_POPULATION_CAP: u64 = 1_000_000;
/// Types whose local extinction is tracked.
pub const TRACKED_TYPES: u64 = 8;

/// Simulates `generations` generations of the type counts.
///
/// `count` type-`x` parents have `n·count` children; `Bin(·, F(x−1))` of
/// them take type `x − 1` (type 0 means not born) and the rest are spread
/// over `{x, x+1, …}` by sequential binomials on `μ_y/T(y−1)`, switching to
/// per-child conditional draws once few remain.
pub fn simulate_branching<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    arity: usize,
    generations: usize,
    population_cap: u64,
    rng: &mut R,
) -> Result<BranchingRun> {
    if generations < 1 {
        return Err(Error::InvalidArgument("need at least one generation".into()));
    }
    if arity < 1 {
        return Err(Error::InvalidArgument("arity must be >= 1".into()));
    }
    let root = spec.sample(rng);
    let mut current: BTreeMap<u64, u64> = BTreeMap::new();
    if root >= 1 {
        current.insert(root, 1);
    }
    let mut run = BranchingRun {
        generations: vec![current.iter().map(|(&t, &c)| (t, c)).collect()],
        extinct_at: current.is_empty().then_some(0),
        saturated: false,
        local_extinct: Vec::new(),
    };
    let mut g = 0;
    while run.extinct_at.is_none() && g < generations {
        let mut next: BTreeMap<u64, u64> = BTreeMap::new();
        for (&x, &count) in &current {
            let children = count * arity as u64;
            let down = binomial(children, spec.cdf(x - 1), rng);
            if x >= 2 && down > 0 {
                *next.entry(x - 1).or_default() += down;
            }
            spread_conditional(spec, x, children - down, rng, &mut next);
        }
        g += 1;
        let total: u64 = next.values().sum();
        run.generations.push(next.iter().map(|(&t, &c)| (t, c)).collect());
        if total == 0 {
            run.extinct_at = Some(g);
        } else if total > population_cap {
            run.saturated = true;
            break;
        }
        current = next;
    }
    let ran = run.generations.len();
    let start = ran - (ran / 4).max(1);
    run.local_extinct = (1..=TRACKED_TYPES)
        .map(|z| {
            run.generations[start..]
                .iter()
                .all(|gen| gen.iter().all(|&(t, c)| t != z || c == 0))
        })
        .collect();
    Ok(run)
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(0)
}

/// Distributes `count` draws of `Y | Y ≥ x` into `out`.
fn spread_conditional<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    x: u64,
    mut count: u64,
    rng: &mut R,
    out: &mut BTreeMap<u64, u64>,
) {
    const INDIVIDUAL: u64 = 32;
    const MAX_SWEEP: u64 = 256;
    let mut y = x;
    while count > INDIVIDUAL && y - x < MAX_SWEEP {
        let above = spec.tail(y - 1);
        if above <= 0.0 {
            break;
        }
        let taken = binomial(count, spec.pmf(y) / above, rng);
        if taken > 0 {
            *out.entry(y).or_default() += taken;
        }
        count -= taken;
        y += 1;
    }
    let above = spec.tail(y - 1);
    for _ in 0..count {
        // Y | Y ≥ y via the tail quantile on (0, T(y−1)]
        let u = 1.0 - rng.random::<f64>();
        let t = spec.quantile_tail(u * above).max(y);
        *out.entry(t).or_default() += 1;
    }
}

/// Survival census over independent branching runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalSummary {
    pub trials: u64,
    pub survivors: u64,
    pub saturated: u64,
    pub frequency: f64,
    /// Survival detected at 5σ, i.e. `k > 5√k` survivors (`k > 25`).
    pub survives: bool,
    /// Runs where every tracked type was locally extinct, among survivors.
    pub survivors_locally_extinct: u64,
}

/// Stream label used for branching runs.
pub const BRANCHING_LABEL: &str = "tree.branching";

pub fn branching_survival(
    spec: &DistributionSpec,
    arity: usize,
    generations: usize,
    trials: u64,
    seed: u64,
    workers: usize,
    population_cap: u64,
) -> Result<SurvivalSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let splitter = SeedSplitter::new(seed, BRANCHING_LABEL);
    let runs = run_trials(trials, workers, |i| {
        simulate_branching(spec, arity, generations, population_cap, &mut splitter.stream(i))
            .map(|r| (r.survived(), r.saturated, r.local_extinct.iter().all(|&e| e)))
    });
    let mut summary = SurvivalSummary {
        trials,
        survivors: 0,
        saturated: 0,
        frequency: 0.0,
        survives: false,
        survivors_locally_extinct: 0,
    };
    for run in runs {
        let (survived, saturated, all_local) = run?;
        summary.survivors += survived as u64;
        summary.saturated += saturated as u64;
        summary.survivors_locally_extinct += (survived && all_local) as u64;
    }
    summary.frequency = summary.survivors as f64 / trials as f64;
    summary.survives = summary.survivors > 25;
    Ok(summary)
}

/// Empirical `r̂_m` from exact samples of the first `m` levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub depth: usize,
    pub trials: u64,
    pub hits: u64,
    pub frequency: f64,
    pub stderr: f64,
}

/// Stream label used by [`tree_uncovered_probe`].
pub const PROBE_LABEL: &str = "tree.probe";
/// Default limit on the number of depth-`m` vertices a probe may need.
pub const DEFAULT_PROBE_BUDGET: u128 = 1 << 40;

/// Whether some vertex at depth `m` is uncovered, for one sample.
///
/// Depth-first with lazily drawn values: a subtree whose root reach exceeds
/// the remaining depth is entirely covered and skipped, and the search stops
/// at the first uncovered depth-`m` vertex.
pub fn depth_has_uncovered<R: Rng + ?Sized>(
    spec: &DistributionSpec,
    arity: usize,
    depth: usize,
    rng: &mut R,
) -> bool {
    let root = spec.sample(rng);
    let mut stack = vec![(0usize, root)];
    while let Some((d, z)) = stack.pop() {
        if z > (depth - d) as u64 {
            continue;
        }
        if d == depth {
            if z == 0 {
                return true;
            }
            continue;
        }
        for _ in 0..arity {
            stack.push((d + 1, step(z, spec.sample(rng))));
        }
    }
    false
}

pub fn tree_uncovered_probe(
    spec: &DistributionSpec,
    arity: usize,
    depth: usize,
    trials: u64,
    seed: u64,
    workers: usize,
    budget: u128,
) -> Result<ProbeResult> {
    if arity < 1 || trials == 0 {
        return Err(Error::InvalidArgument("need arity >= 1 and trials >= 1".into()));
    }
    let required = (arity as u128)
        .checked_pow(depth as u32)
        .unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::BudgetExceeded {
            required,
            limit: budget,
        });
    }
    let splitter = SeedSplitter::new(seed, PROBE_LABEL);
    let hits = run_trials(trials, workers, |i| {
        let mut rng = splitter.stream(((depth as u64) << 40) | i);
        depth_has_uncovered(spec, arity, depth, &mut rng)
    })
    .into_iter()
    .filter(|&h| h)
    .count() as u64;
    let frequency = hits as f64 / trials as f64;
    Ok(ProbeResult {
        depth,
        trials,
        hits,
        frequency,
        stderr: (frequency * (1.0 - frequency) / trials as f64).sqrt(),
    })
}
