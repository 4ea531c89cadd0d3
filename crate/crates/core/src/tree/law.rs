use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// How an offspring law was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    Explicit,
    /// Weights proportional to `k^-(2+eps)` on `2..=cutoff`, with the weight
    /// at `k = 1` chosen so the mean hits the target.
    HeavyTail { eps: f64, cutoff: u32 },
}

/// Offspring distribution on `{1, 2, ..., k_max}` (no extinction).
#[derive(Clone, Debug)]
pub struct OffspringLaw {
    /// `weights[k]` is the probability of `k` children; `weights[0] == 0`.
    weights: Vec<f64>,
    mean: f64,
    second_moment: f64,
    kind: LawKind,
    sampler: Sampler,
}

#[derive(Clone, Debug)]
enum Sampler {
    Constant(u32),
    Weighted(WeightedIndex<f64>),
}

impl PartialEq for OffspringLaw {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.kind == other.kind
    }
}

impl OffspringLaw {
    /// Law from a weight vector indexed by child count (`weights[0]` must be 0).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Self::build(weights, LawKind::Explicit)
    }

    /// Law from `(child count, probability)` pairs.
    pub fn from_pairs(pairs: &[(u32, f64)]) -> Result<Self> {
        let k_max = pairs.iter().map(|&(k, _)| k).max().unwrap_or(0) as usize;
        let mut weights = vec![0.0; k_max + 1];
        for &(k, w) in pairs {
            weights[k as usize] += w;
        }
        Self::from_weights(weights)
    }

    /// Every vertex has exactly `k` children.
    pub fn deterministic(k: u32) -> Result<Self> {
        Self::from_pairs(&[(k, 1.0)])
    }

    /// Infinite-variance-style law of fixed mean: `q_k ∝ k^-(2+eps)` for
    /// `2 <= k <= cutoff`, remaining mass at `k = 1`.
    ///
    /// The variance is finite for any finite cutoff but grows like
    /// `cutoff^(1-eps)`, which is what the variance-blowup experiment needs.
    pub fn heavy_tail(mean: f64, eps: f64, cutoff: u32) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidLaw(format!("heavy-tail eps must lie in (0,1), got {eps}")));
        }
        if cutoff < 2 || mean <= 1.0 {
            return Err(Error::InvalidLaw("heavy-tail law needs cutoff >= 2 and mean > 1".into()));
        }
        let tail = |k: u32| (k as f64).powf(-(2.0 + eps));
        let mass: f64 = (2..=cutoff).map(tail).sum();
        let first_moment: f64 = (2..=cutoff).map(|k| k as f64 * tail(k)).sum();
        // mean = (1 - c*mass) + c*first_moment
        let c = (mean - 1.0) / (first_moment - mass);
        let q1 = 1.0 - c * mass;
        if q1 < 0.0 {
            return Err(Error::InvalidLaw(format!(
                "mean {mean} unreachable with eps {eps} and cutoff {cutoff}"
            )));
        }
        let mut weights = vec![0.0; cutoff as usize + 1];
        weights[1] = q1;
        for k in 2..=cutoff {
            weights[k as usize] = c * tail(k);
        }
        Self::build(weights, LawKind::HeavyTail { eps, cutoff })
    }

    fn build(weights: Vec<f64>, kind: LawKind) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidLaw("no positive child counts".into()));
        }
        if weights[0] != 0.0 {
            return Err(Error::InvalidLaw(format!("q_0 = {} must be zero", weights[0])));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidLaw(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidLaw(format!("weights sum to {total}, not 1")));
        }
        if weights.len() - 1 > u32::MAX as usize {
            return Err(Error::InvalidLaw("support too large".into()));
        }
        let mut weights = weights;
        while weights.len() > 2 && *weights.last().unwrap() == 0.0 {
            weights.pop();
        }
        let mean = weights.iter().enumerate().map(|(k, w)| k as f64 * w).sum();
        let second_moment = weights.iter().enumerate().map(|(k, w)| (k * k) as f64 * w).sum();
        let support: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0.0).collect();
        let sampler = if support.len() == 1 {
            Sampler::Constant(support[0] as u32)
        } else {
            Sampler::Weighted(
                WeightedIndex::new(&weights).map_err(|e| Error::InvalidLaw(e.to_string()))?,
            )
        };
        Ok(Self { weights, mean, second_moment, kind, sampler })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prob(&self, k: u32) -> f64 {
        self.weights.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn max_children(&self) -> u32 {
        (self.weights.len() - 1) as u32
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `E N^2`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    /// `E N(N-1)`, the generating function's second derivative at 1.
    pub fn factorial_moment(&self) -> f64 {
        self.second_moment - self.mean
    }

    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn is_heavy_tail(&self) -> bool {
        matches!(self.kind, LawKind::HeavyTail { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match &self.sampler {
            Sampler::Constant(k) => *k,
            Sampler::Weighted(w) => w.sample(rng) as u32,
        }
    }
}

/// Serialized form of an [`OffspringLaw`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    /// `{"weights": [0, 0.5, 0, 0.5]}`, indexed by child count.
    Weights { weights: Vec<f64> },
    /// `{"heavy_tail": {"mean": 2, "eps": 0.5, "cutoff": 1000}}`.
    HeavyTail { heavy_tail: HeavyTailSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailSpec {
    pub mean: f64,
    pub eps: f64,
    pub cutoff: u32,
}

impl LawSpec {
    pub fn build(&self) -> Result<OffspringLaw> {
        match self {
            LawSpec::Weights { weights } => OffspringLaw::from_weights(weights.clone()),
            LawSpec::HeavyTail { heavy_tail: h } => OffspringLaw::heavy_tail(h.mean, h.eps, h.cutoff),
        }
    }
}

impl From<&OffspringLaw> for LawSpec {
    fn from(law: &OffspringLaw) -> Self {
        match law.kind {
            LawKind::HeavyTail { eps, cutoff } => LawSpec::HeavyTail {
                heavy_tail: HeavyTailSpec { mean: law.mean, eps, cutoff },
            },
            LawKind::Explicit => LawSpec::Weights { weights: law.weights.clone() },
        }
    }
}

/// Sequence of offspring laws for a branching process in a varying environment.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    laws: Vec<OffspringLaw>,
    cumulative_means: Vec<f64>,
}

impl Environment {
    /// `laws[n]` governs the children of generation-`n` vertices.
    pub fn new(laws: Vec<OffspringLaw>) -> Self {
        let mut cumulative_means = Vec::with_capacity(laws.len() + 1);
        cumulative_means.push(1.0);
        let mut m = 1.0;
        for law in &laws {
            m *= law.mean();
            cumulative_means.push(m);
        }
        Self { laws, cumulative_means }
    }

    pub fn constant(law: OffspringLaw, generations: usize) -> Self {
        Self::new(vec![law; generations])
    }

    /// `first, second, first, second, ...`
    pub fn alternating(first: OffspringLaw, second: OffspringLaw, generations: usize) -> Self {
        Self::new(
            (0..generations)
                .map(|n| if n % 2 == 0 { first.clone() } else { second.clone() })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn laws(&self) -> &[OffspringLaw] {
        &self.laws
    }

    /// `M_0 = 1, M_n = M_{n-1} * mean(Q_n)`.
    pub fn cumulative_means(&self) -> &[f64] {
        &self.cumulative_means
    }

    /// Smallest per-generation mean.
    pub fn min_mean(&self) -> f64 {
        self.laws.iter().map(OffspringLaw::mean).fold(f64::INFINITY, f64::min)
    }

    /// Largest per-generation factorial moment `Q_n''(1)`.
    pub fn max_factorial_moment(&self) -> f64 {
        self.laws.iter().map(OffspringLaw::factorial_moment).fold(0.0, f64::max)
    }
}
