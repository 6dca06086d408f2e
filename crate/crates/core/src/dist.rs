//! The fountain law μ on ℕ₀.
//!
//! A [`DistributionSpec`] is a finite head `μ_0, …, μ_{K-1}` followed by one of
//! three analytic tails. The closed set of tails is what lets the series
//! questions (finite mean, summability of `∏ F`) be answered exactly instead
//! of numerically.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-9;

/// Tail beyond the explicit head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `μ_n = 0` for `n ≥ K`.
    Finite,
    /// `μ_n = A·ratioⁿ` for `n ≥ K`, with `A` fixed by normalization.
    Geometric { ratio: f64 },
    /// `Σ_{k>n} μ_k = c/n` for `n ≥ K − 1`, so `μ_n = c/(n(n−1))` for `n ≥ K`.
    Power { c: f64 },
}

/// Verdict of an exact series test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    Converges,
    Diverges,
}

/// Partial sums of `Σ_{m≥0} ∏_{k=1}^m F(k−1)`.
///
/// `terms[0]` is the empty product 1. The expected number of uncovered
/// vertices of ℕ₀ is `Σ_{m≥0} q_m` with `q_m = terms[m + 1]`, i.e. this series
/// minus its leading 1; both converge or diverge together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KestenSeries {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub verdict: SeriesVerdict,
    /// `terms[m_max] / partial_sums[m_max]`, a rough convergence indicator.
    pub last_term_ratio: f64,
}

/// A probability law on ℕ₀ with an explicit tail model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct DistributionSpec {
    head: Vec<f64>,
    tail: TailModel,
    tail_mass: f64,
    head_cdf: Vec<f64>,
    head_tail: Vec<f64>,
}

impl DistributionSpec {
    /// Finite support given by the full probability vector.
    pub fn finite(mut probs: Vec<f64>) -> Result<Self> {
        check_entries(&probs)?;
        while probs.len() > 1 && probs.last() == Some(&0.0) {
            probs.pop();
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "finite law has mass {total}, expected 1"
            )));
        }
        for p in &mut probs {
            *p /= total;
        }
        Self::build(probs, TailModel::Finite, 0.0)
    }

    /// Uniform law on `{0, …, m−1}`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidDistribution(format!(
                "uniform law needs m >= 2, got {m}"
            )));
        }
        Self::finite(vec![1.0 / m as f64; m])
    }

    /// `μ_0 = 1 − p`, `μ_n = p`.
    pub fn two_point(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("two-point law needs n >= 1".into()));
        }
        let mut probs = vec![0.0; n + 1];
        probs[0] = 1.0 - p;
        probs[n] = p;
        Self::finite(probs)
    }

    /// Geometric tail with the given head. The tail carries the mass the head
    /// leaves over.
    pub fn geometric_tail(head: Vec<f64>, ratio: f64) -> Result<Self> {
        check_entries(&head)?;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "geometric ratio must lie in (0,1), got {ratio}"
            )));
        }
        let head_mass: f64 = head.iter().sum();
        let tail_mass = 1.0 - head_mass;
        if tail_mass <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "head mass {head_mass} leaves nothing for the geometric tail"
            )));
        }
        Self::build(head, TailModel::Geometric { ratio }, tail_mass)
    }

    /// `μ_n = (1 − p)·pⁿ`, the geometric law with parameter `1 − p`.
    pub fn geometric(p: f64) -> Result<Self> {
        Self::geometric_tail(Vec::new(), p)
    }

    /// Power tail `Σ_{k>n} μ_k = c/n` from `n = K − 1` on, where `K` is the
    /// head length. The head weights are rescaled to carry mass `1 − c/(K−1)`.
    pub fn power_tail(head_weights: Vec<f64>, c: f64) -> Result<Self> {
        if let Some(w) = head_weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "head weight {w} is not a finite nonnegative number"
            )));
        }
        let k = head_weights.len();
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "power tail constant must be positive, got {c}"
            )));
        }
        if k < 2 || c >= (k - 1) as f64 {
            return Err(Error::InvalidDistribution(format!(
                "power tail with c = {c} needs a head of length K > c + 1, got K = {k}"
            )));
        }
        let weight: f64 = head_weights.iter().sum();
        if weight <= 0.0 {
            return Err(Error::InvalidDistribution("power tail head has zero weight".into()));
        }
        let tail_mass = c / (k - 1) as f64;
        let scale = (1.0 - tail_mass) / weight;
        let head = head_weights.into_iter().map(|w| w * scale).collect();
        Self::build(head, TailModel::Power { c }, tail_mass)
    }

    /// Power tail with a uniform head of the smallest admissible length.
    pub fn power(c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1e6) {
            return Err(Error::InvalidDistribution(format!(
                "power tail constant must lie in (0, 1e6), got {c}"
            )));
        }
        let k = c.floor() as usize + 3;
        Self::power_tail(vec![1.0; k], c)
    }

    fn build(head: Vec<f64>, tail: TailModel, tail_mass: f64) -> Result<Self> {
        let k = head.len();
        let mut head_cdf = Vec::with_capacity(k);
        let mut acc = 0.0;
        for &p in &head {
            acc += p;
            head_cdf.push(acc);
        }
        if matches!(tail, TailModel::Finite) {
            if let Some(last) = head_cdf.last_mut() {
                *last = 1.0;
            }
        }
        let mut head_tail = vec![0.0; k];
        let mut t = tail_mass;
        for i in (0..k).rev() {
            head_tail[i] = t;
            t += head[i];
        }
        let spec = Self {
            head,
            tail,
            tail_mass,
            head_cdf,
            head_tail,
        };
        let mu0 = spec.pmf(0);
        if !(mu0 > 0.0 && mu0 < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "mu_0 must lie in (0,1), got {mu0}"
            )));
        }
        Ok(spec)
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail
    }

    /// Tail onset index `K` (the head length).
    pub fn onset(&self) -> usize {
        self.head.len()
    }

    /// `Σ_{k≥K} μ_k`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `n_0 = sup{n : μ_n ≠ 0}` for finite support, `None` otherwise.
    pub fn support_max(&self) -> Option<u64> {
        match self.tail {
            TailModel::Finite => Some(self.head.len() as u64 - 1),
            _ => None,
        }
    }

    pub fn pmf(&self, n: u64) -> f64 {
        let k = self.head.len() as u64;
        if n < k {
            return self.head[n as usize];
        }
        match self.tail {
            TailModel::Finite => 0.0,
            TailModel::Geometric { ratio } => {
                self.tail_mass * (1.0 - ratio) * ratio.powf((n - k) as f64)
            }
            TailModel::Power { c } => {
                let n = n as f64;
                c / (n * (n - 1.0))
            }
        }
    }

    /// `F(k) = Σ_{l≤k} μ_l`.
    pub fn cdf(&self, k: u64) -> f64 {
        if let Some(&f) = self.head_cdf.get(k as usize) {
            return f;
        }
        match self.tail {
            TailModel::Finite => 1.0,
            _ => 1.0 - self.tail(k),
        }
    }

    /// `T(k) = 1 − F(k) = Σ_{l>k} μ_l`, evaluated without cancellation.
    pub fn tail(&self, k: u64) -> f64 {
        if let Some(&t) = self.head_tail.get(k as usize) {
            return t;
        }
        let onset = self.head.len() as u64;
        match self.tail {
            TailModel::Finite => 0.0,
            TailModel::Geometric { ratio } => {
                self.tail_mass * (((k + 1 - onset) as f64) * ratio.ln()).exp()
            }
            TailModel::Power { c } => c / k as f64,
        }
    }

    /// `ln F(k)`, accurate both for `F` near 0 and near 1.
    pub fn ln_cdf(&self, k: u64) -> f64 {
        let t = self.tail(k);
        if t < 0.5 {
            (-t).ln_1p()
        } else {
            self.cdf(k).ln()
        }
    }

    /// Mean of μ, `None` when infinite.
    pub fn mean(&self) -> Option<f64> {
        let head: f64 = self
            .head
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum();
        match self.tail {
            TailModel::Finite => Some(head),
            TailModel::Geometric { ratio } => {
                let k = self.head.len() as f64;
                Some(head + self.tail_mass * (k + ratio / (1.0 - ratio)))
            }
            TailModel::Power { .. } => None,
        }
    }

    /// Whether the `n`-th moment `Σ kⁿ μ_k` is infinite. Exact per tail model;
    /// the zeroth moment is always 1.
    pub fn moment_diverges(&self, n: u32) -> bool {
        n >= 1 && matches!(self.tail, TailModel::Power { .. })
    }

    /// Smallest `n` with `T(n) < v`, for `v ∈ (0, 1]`.
    pub fn quantile_tail(&self, v: f64) -> u64 {
        let k = self.head.len();
        let idx = self.head_tail.partition_point(|&t| t >= v);
        if idx < k {
            return idx as u64;
        }
        let onset = k as u64;
        let guess = match self.tail {
            TailModel::Finite => return onset.saturating_sub(1),
            TailModel::Geometric { ratio } => {
                let x = (v / self.tail_mass).ln() / ratio.ln();
                let j = if x.is_finite() { x.max(0.0).floor() + 1.0 } else { 1.0 };
                (j.min(1e18) as u64).saturating_add(onset) - 1
            }
            TailModel::Power { c } => {
                let x = c / v;
                (x.min(1e18).floor() as u64).saturating_add(1).max(onset)
            }
        };
        let mut n = guess.max(onset);
        while self.tail(n) >= v {
            n += 1;
        }
        while n > onset && self.tail(n - 1) < v {
            n -= 1;
        }
        n
    }

    /// Inverse-CDF map: the smallest `n` with `u < F(n)`.
    pub fn sample_with_uniform(&self, u: f64) -> u64 {
        self.quantile_tail(1.0 - u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sample_with_uniform(rng.random::<f64>())
    }

    /// Exact convergence verdict for `Σ_m ∏_{k=1}^m F(k−1)`.
    ///
    /// With finite support or a geometric tail, `∏ F` tends to a positive
    /// limit and the series diverges. Under the power tail `F(k) = 1 − c/k`,
    /// the product behaves like `m^{−c}` (Gauss/Raabe test), so the series
    /// converges iff `c > 1`.
    pub fn kesten_verdict(&self) -> SeriesVerdict {
        match self.tail {
            TailModel::Power { c } if c > 1.0 => SeriesVerdict::Converges,
            _ => SeriesVerdict::Diverges,
        }
    }

    /// Partial sums of `Σ_m ∏_{k=1}^m F(k−1)` up to `m_max`, with the exact
    /// verdict for the tail model.
    pub fn kesten_series(&self, m_max: usize) -> Result<KestenSeries> {
        if m_max == 0 {
            return Err(Error::InvalidArgument("kesten_series needs m_max >= 1".into()));
        }
        let mut terms = Vec::with_capacity(m_max + 1);
        let mut partial_sums = Vec::with_capacity(m_max + 1);
        let mut log_term = 0.0;
        let mut sum = 0.0;
        for m in 0..=m_max {
            if m > 0 {
                log_term += self.ln_cdf(m as u64 - 1);
            }
            let term = log_term.exp();
            sum += term;
            terms.push(term);
            partial_sums.push(sum);
        }
        Ok(KestenSeries {
            last_term_ratio: terms[m_max] / sum,
            terms,
            partial_sums,
            verdict: self.kesten_verdict(),
        })
    }
}

fn check_entries(probs: &[f64]) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0 && **p <= 1.0)) {
        return Err(Error::InvalidDistribution(format!(
            "probability {p} is outside [0,1]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpecJson {
    head: Vec<f64>,
    #[serde(default)]
    tail: Option<TailJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TailJson {
    model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
}

impl TryFrom<SpecJson> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: SpecJson) -> Result<Self> {
        let Some(tail) = raw.tail else {
            return Self::finite(raw.head);
        };
        if let Some(k) = tail.k {
            if k != raw.head.len() {
                return Err(Error::InvalidDistribution(format!(
                    "K = {k} does not match head length {}",
                    raw.head.len()
                )));
            }
        }
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                Error::InvalidDistribution(format!("{} tail needs \"{name}\"", tail.model))
            })
        };
        match tail.model.as_str() {
            "finite" => Self::finite(raw.head),
            "geometric" => Self::geometric_tail(raw.head, need(tail.p, "p")?),
            "power" => Self::power_tail(raw.head, need(tail.c, "c")?),
            other => Err(Error::InvalidDistribution(format!(
                "unknown tail model {other:?}"
            ))),
        }
    }
}

impl From<DistributionSpec> for SpecJson {
    fn from(spec: DistributionSpec) -> Self {
        let k = Some(spec.head.len());
        let tail = match spec.tail {
            TailModel::Finite => TailJson {
                model: "finite".into(),
                p: None,
                c: None,
                k,
            },
            TailModel::Geometric { ratio } => TailJson {
                model: "geometric".into(),
                p: Some(ratio),
                c: None,
                k,
            },
            TailModel::Power { c } => TailJson {
                model: "power".into(),
                p: None,
                c: Some(c),
                k,
            },
        };
        SpecJson {
            head: spec.head,
            tail: Some(tail),
        }
    }
}
