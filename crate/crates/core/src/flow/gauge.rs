use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclid::EuclidGauge;

/// Nondecreasing gauge `f` on levels `0..=N`, stored as increments
/// `h(k) = f(k) - f(k-1)` with `f(-1) = 0`.
///
/// Serializes as the increment array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Gauge {
    increments: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Gauge {
    type Error = Error;

    fn try_from(increments: Vec<f64>) -> Result<Self> {
        Gauge::from_increments(increments)
    }
}

impl From<Gauge> for Vec<f64> {
    fn from(g: Gauge) -> Self {
        g.increments
    }
}

impl Gauge {
    pub fn from_increments(increments: Vec<f64>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidGauge("gauge needs at least level 0".into()));
        }
        if let Some((k, h)) = increments.iter().enumerate().find(|(_, h)| !(h.is_finite() && **h >= 0.0)) {
            return Err(Error::InvalidGauge(format!("increment h({k}) = {h} is not a nonnegative number")));
        }
        Ok(Self { increments })
    }

    /// Gauge from its values `f(0), ..., f(N)`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let mut prev = 0.0;
        let mut increments = Vec::with_capacity(values.len());
        for (k, &f) in values.iter().enumerate() {
            if !(f >= prev) {
                return Err(Error::InvalidGauge(format!("f({k}) = {f} < f({}) = {prev}", k as i64 - 1)));
            }
            increments.push(f - prev);
            prev = f;
        }
        Self::from_increments(increments)
    }

    /// Edge-percolation gauge `f(n) = prod_{i <= n} 1/p_i` (so `f(0) = 1`).
    ///
    /// `keep[i]` is the retention probability of edges into level `i + 1`.
    pub fn percolation(keep: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(keep.len() + 1);
        let mut f = 1.0;
        values.push(f);
        for (i, &p) in keep.iter().enumerate() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidGauge(format!("p_{} = {p} outside (0, 1]", i + 1)));
            }
            f /= p;
            values.push(f);
        }
        Self::from_values(&values)
    }

    /// `f(n) = g(b^-n)` for a decreasing Euclidean gauge `g`.
    pub fn euclid(g: &EuclidGauge, b: u32, height: usize) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidGauge("base must be at least 2".into()));
        }
        let values: Vec<f64> = (0..=height).map(|n| g.eval((b as f64).powi(-(n as i32)))).collect();
        Self::from_values(&values)
    }

    /// The comparison gauge built from a mean profile `M_0 = 1 <= M_1 <= ... <= M_N`:
    /// `h(j) = b^j (1/M_j - 1/M_{j+1})` for `j < N` and `h(N) = b^N / M_N`.
    pub fn phi(means: &[f64], b: u32) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidGauge("alphabet size must be at least 2".into()));
        }
        if means.first() != Some(&1.0) {
            return Err(Error::InvalidGauge("mean profile must start with M_0 = 1".into()));
        }
        if let Some(j) = means.windows(2).position(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidGauge(format!("mean profile decreases at level {}", j + 1)));
        }
        let n = means.len() - 1;
        let increments = (0..=n)
            .map(|j| {
                let scale = (b as f64).powi(j as i32);
                if j < n {
                    scale * (1.0 / means[j] - 1.0 / means[j + 1])
                } else {
                    scale / means[j]
                }
            })
            .collect();
        Self::from_increments(increments)
    }

    /// `f(n) = base^n`.
    pub fn power(base: f64, height: usize) -> Result<Self> {
        if !(base >= 1.0) {
            return Err(Error::InvalidGauge(format!("power gauge base {base} < 1")));
        }
        let values: Vec<f64> = (0..=height).map(|n| base.powi(n as i32)).collect();
        Self::from_values(&values)
    }

    pub fn height(&self) -> usize {
        self.increments.len() - 1
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, k: usize) -> f64 {
        self.increments[k]
    }

    /// `f(k)`.
    pub fn value(&self, k: usize) -> f64 {
        self.increments[..=k].iter().sum()
    }

    pub fn values(&self) -> Vec<f64> {
        self.increments
            .iter()
            .scan(0.0, |acc, h| {
                *acc += h;
                Some(*acc)
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.increments.iter().all(|&h| h == 0.0)
    }

    /// Gauge restricted to levels `0..=height`.
    pub fn truncated(&self, height: usize) -> Result<Self> {
        if height > self.height() {
            return Err(Error::HeightMismatch(format!(
                "gauge of height {} cannot cover height {height}",
                self.height()
            )));
        }
        Ok(Self { increments: self.increments[..=height].to_vec() })
    }
}

/// Named gauge families, as they appear in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeSpec {
    Percolation { keep: Vec<f64> },
    Euclid { g: EuclidGauge, b: u32 },
    Phi { means: Vec<f64>, b: u32 },
    Power { base: f64 },
    Increments { h: Vec<f64> },
}

/// Build a gauge of the requested height from a named family.
pub fn make_gauge(spec: &GaugeSpec, height: usize) -> Result<Gauge> {
    let g = match spec {
        GaugeSpec::Percolation { keep } => {
            if keep.len() < height {
                return Err(Error::HeightMismatch(format!("{} retention probabilities for height {height}", keep.len())));
            }
            Gauge::percolation(&keep[..height])?
        }
        GaugeSpec::Euclid { g, b } => Gauge::euclid(g, *b, height)?,
        GaugeSpec::Phi { means, b } => {
            if means.len() != height + 1 {
                return Err(Error::HeightMismatch(format!("{} means for height {height}", means.len())));
            }
            Gauge::phi(means, *b)?
        }
        GaugeSpec::Power { base } => Gauge::power(*base, height)?,
        GaugeSpec::Increments { h } => Gauge::from_increments(h.clone())?.truncated(height)?,
    };
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percolation_half() {
        let g = Gauge::percolation(&[0.5, 0.5]).unwrap();
        assert_eq!(g.values(), vec![1.0, 2.0, 4.0]);
        assert_eq!(g.increments(), &[1.0, 1.0, 2.0]);
        assert!(Gauge::percolation(&[0.0]).is_err());
        assert!(Gauge::percolation(&[1.5]).is_err());
    }

    #[test]
    fn phi_binary_means() {
        let g = Gauge::phi(&[1.0, 2.0, 4.0], 2).unwrap();
        assert_eq!(g.values(), vec![0.5, 1.0, 2.0]);
        assert!(Gauge::phi(&[1.0, 3.0, 2.0], 2).is_err());
        assert!(Gauge::phi(&[2.0, 3.0], 2).is_err());
        assert!(Gauge::phi(&[1.0, 3.0], 1).is_err());
    }

    #[test]
    fn euclid_power_law() {
        let alpha = 0.7;
        let g = Gauge::euclid(&EuclidGauge::Power { alpha }, 2, 6).unwrap();
        for (n, f) in g.values().into_iter().enumerate() {
            assert!((f - 2f64.powf(alpha * n as f64)).abs() < 1e-12 * f);
        }
    }

    #[test]
    fn rejects_decreasing_values() {
        assert!(Gauge::from_values(&[1.0, 0.5]).is_err());
        assert!(Gauge::from_increments(vec![1.0, -0.1]).is_err());
        assert!(Gauge::from_increments(vec![]).is_err());
    }

    #[test]
    fn serializes_as_increments() {
        let g = Gauge::percolation(&[0.5, 0.5]).unwrap();
        assert_eq!(serde_json::to_string(&g).unwrap(), "[1.0,1.0,2.0]");
        assert!(serde_json::from_str::<Gauge>("[1.0,-1.0]").is_err());
    }

    #[test]
    fn named_families() {
        let g = make_gauge(&GaugeSpec::Power { base: 2.0 }, 3).unwrap();
        assert_eq!(g.values(), vec![1.0, 2.0, 4.0, 8.0]);
        let spec: GaugeSpec = serde_json::from_str(r#"{"kind":"percolation","keep":[0.5,0.5,0.5]}"#).unwrap();
        assert_eq!(make_gauge(&spec, 2).unwrap().values(), vec![1.0, 2.0, 4.0]);
        assert!(make_gauge(&spec, 4).is_err());
    }
}
