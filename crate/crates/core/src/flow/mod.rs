//! Gauges, flows, energies and capacities on a single tree.
//!
//! For a gauge with increments `h` the energy of a flow `θ` is
//! `Σ_σ h(|σ|) θ(σ)²`, which equals the double integral of `f(|x ∧ y|)`
//! against `θ × θ`. Minimizing it over unit flows is an electrical problem:
//! each vertex at level `k` sits behind a resistor of size `h(k)`, and the
//! minimal energy is the effective resistance seen from above the root.

mod capacity;
pub mod frank_wolfe;
mod gauge;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Environment, Tree};

pub use capacity::{capacity, capacity_frank_wolfe, Capacity, LeafKernel};
pub use gauge::{make_gauge, Gauge, GaugeSpec};
pub use frank_wolfe::{FwOptions, FwSolution};

const CONSERVATION_TOLERANCE: f64 = 1e-9;

/// Nonnegative vertex weights on a tree, conserved at every internal vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Flow {
    weights: Vec<f64>,
}

impl Flow {
    /// Flow induced by a measure on the bottom level.
    pub fn from_leaf_weights(tree: &Tree, leaf_weights: &[f64]) -> Result<Self> {
        let leaves = tree.leaves();
        if leaf_weights.len() != leaves.len() {
            return Err(Error::InvalidFlow(format!(
                "{} leaf weights for {} leaves",
                leaf_weights.len(),
                leaves.len()
            )));
        }
        if leaf_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidFlow("leaf weights must be finite and nonnegative".into()));
        }
        let mut weights = vec![0.0; tree.len()];
        weights[leaves.clone()].copy_from_slice(leaf_weights);
        for v in (0..leaves.start).rev() {
            weights[v] = tree.children(v).map(|c| weights[c]).sum();
        }
        Ok(Self { weights })
    }

    /// Flow from explicit vertex weights; conservation is checked.
    pub fn from_vertex_weights(tree: &Tree, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != tree.len() {
            return Err(Error::InvalidFlow(format!("{} weights for {} vertices", weights.len(), tree.len())));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidFlow("weights must be finite and nonnegative".into()));
        }
        for v in 0..tree.leaves().start {
            let below: f64 = tree.children(v).map(|c| weights[c]).sum();
            if (below - weights[v]).abs() > CONSERVATION_TOLERANCE * weights[v].max(1.0) {
                return Err(Error::InvalidFlow(format!(
                    "vertex {v} carries {} but its children carry {below}",
                    weights[v]
                )));
            }
        }
        Ok(Self { weights })
    }

    /// Unit flow splitting mass in proportion to bottom-level descendants:
    /// `U(σ) = Z_N(σ) / Z_N`.
    pub fn uniform_leaf(tree: &Tree) -> Self {
        let below = tree.leaf_descendants();
        let total = below[0] as f64;
        Self { weights: below.into_iter().map(|z| z as f64 / total).collect() }
    }

    /// Unit flow whose leaf masses are a flat Dirichlet draw.
    pub fn random_leaf(tree: &Tree, seed: u64) -> Self {
        let mut r = crate::rng::rng(seed);
        let raw: Vec<f64> = tree.leaves().map(|_| -(1.0 - r.gen::<f64>()).ln()).collect();
        let total: f64 = raw.iter().sum();
        let leaf_weights: Vec<f64> = raw.iter().map(|x| x / total).collect();
        Self::from_leaf_weights(tree, &leaf_weights).expect("positive weights")
    }

    /// Unit flow concentrated on a single leaf (by bottom-level position).
    pub fn point_mass(tree: &Tree, leaf: usize) -> Self {
        let mut leaf_weights = vec![0.0; tree.level_size(tree.height())];
        leaf_weights[leaf] = 1.0;
        Self::from_leaf_weights(tree, &leaf_weights).expect("valid point mass")
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights[0]
    }

    pub fn leaf_weights<'a>(&'a self, tree: &Tree) -> &'a [f64] {
        &self.weights[tree.leaves()]
    }

    /// Same flow scaled to total mass one.
    pub fn normalized(&self) -> Self {
        let t = self.total();
        Self { weights: self.weights.iter().map(|w| w / t).collect() }
    }

    /// `S_k = Σ_{|σ| = k} θ(σ)²` for every level.
    pub fn level_square_sums(&self, tree: &Tree) -> Vec<f64> {
        (0..=tree.height())
            .map(|k| tree.level(k).map(|v| self.weights[v] * self.weights[v]).sum())
            .collect()
    }

    pub fn check_tree(&self, tree: &Tree) -> Result<()> {
        if self.weights.len() != tree.len() {
            return Err(Error::InvalidFlow(format!(
                "flow has {} entries, tree has {} vertices",
                self.weights.len(),
                tree.len()
            )));
        }
        Ok(())
    }
}

/// Energy of a flow together with its per-level square sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub gauge: Gauge,
    #[serde(rename = "S")]
    pub level_square_sums: Vec<f64>,
    pub energy: f64,
}

/// `Σ_k h(k) S_k`.
pub fn energy(tree: &Tree, gauge: &Gauge, flow: &Flow) -> Result<EnergyReport> {
    flow.check_tree(tree)?;
    if gauge.height() < tree.height() {
        return Err(Error::HeightMismatch(format!(
            "gauge of height {} on a tree of height {}",
            gauge.height(),
            tree.height()
        )));
    }
    let s = flow.level_square_sums(tree);
    let energy = s.iter().zip(gauge.increments()).map(|(s, h)| s * h).sum();
    Ok(EnergyReport { gauge: gauge.clone(), level_square_sums: s, energy })
}

/// Growth of a flow's level square sums against a mean profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowBoundStats {
    /// `max_n M_n S_n`.
    pub constant: f64,
    /// `M_n S_n` for every level.
    pub profile: Vec<f64>,
}

pub fn flow_bound_stats(tree: &Tree, flow: &Flow, means: &[f64]) -> Result<FlowBoundStats> {
    flow.check_tree(tree)?;
    if means.len() < tree.height() + 1 {
        return Err(Error::HeightMismatch(format!(
            "{} means for a tree of height {}",
            means.len(),
            tree.height()
        )));
    }
    if means.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InvalidArgument("means must be positive".into()));
    }
    let profile: Vec<f64> = flow
        .level_square_sums(tree)
        .into_iter()
        .zip(means)
        .map(|(s, m)| s * m)
        .collect();
    let constant = profile.iter().copied().fold(0.0, f64::max);
    Ok(FlowBoundStats { constant, profile })
}

/// Unit flow on the rays of a varying-environment tree whose normalized
/// subtree sizes stay below the growth envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedFlow {
    pub flow: Flow,
    pub k: usize,
    pub surviving_leaves: usize,
    /// Fraction of the uniform leaf mass kept.
    pub surviving_mass: f64,
    /// `1 + V / (a² - a)`, the bound on the second moment of the limit martingale.
    pub second_moment_bound: f64,
    /// `Z_N / M_N`.
    pub root_martingale: f64,
}

/// Keep the leaves all of whose ancestors `v_n` at levels `k < n <= N`
/// satisfy `W_N(v_n)² <= M_n a^{-n/2}` with `W_N(σ) = M_{|σ|} Z_N(σ) / M_N`,
/// and spread unit mass uniformly over them.
pub fn bounded_flow_bpve(tree: &Tree, env: &Environment, k: usize) -> Result<BoundedFlow> {
    let n = tree.height();
    if k >= n.max(1) && n > 0 {
        return Err(Error::InvalidArgument(format!("k = {k} must be below the height {n}")));
    }
    if env.len() < n {
        return Err(Error::EnvironmentTooShort { available: env.len(), requested: n });
    }
    let a = env.min_mean();
    if !(a > 1.0) {
        return Err(Error::InvalidArgument(format!("environment must be supercritical, inf mean = {a}")));
    }
    let means = env.cumulative_means();
    let below = tree.leaf_descendants();
    let mut good = vec![true; tree.len()];
    for level in 1..=n {
        let threshold = means[level] * a.powf(-(level as f64) / 2.0);
        for v in tree.level(level) {
            let parent_ok = good[tree.parent(v).expect("non-root")];
            let w = means[level] * below[v] as f64 / means[n];
            good[v] = parent_ok && (level <= k || w * w <= threshold);
        }
    }
    let leaves = tree.leaves();
    let surviving_leaves = leaves.clone().filter(|&v| good[v]).count();
    if surviving_leaves == 0 {
        return Err(Error::EmptySupport { k });
    }
    let mass = 1.0 / surviving_leaves as f64;
    let leaf_weights: Vec<f64> = leaves.clone().map(|v| if good[v] { mass } else { 0.0 }).collect();
    let flow = Flow::from_leaf_weights(tree, &leaf_weights)?;
    Ok(BoundedFlow {
        flow,
        k,
        surviving_leaves,
        surviving_mass: surviving_leaves as f64 / leaves.len() as f64,
        second_moment_bound: 1.0 + env.max_factorial_moment() / (a * a - a),
        root_martingale: tree.level_size(n) as f64 / means[n],
    })
}

/// [`bounded_flow_bpve`] at the least `k` with nonempty support.
pub fn bounded_flow_bpve_auto(tree: &Tree, env: &Environment) -> Result<BoundedFlow> {
    let top = tree.height().max(1);
    let mut last = Error::EmptySupport { k: 0 };
    for k in 0..top {
        match bounded_flow_bpve(tree, env, k) {
            Ok(f) => return Ok(f),
            Err(e @ Error::EmptySupport { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{geometric_means, OffspringLaw};

    #[test]
    fn root_increment_only() {
        let q = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
        let t = Tree::sample_gw(&q, 5, 11).unwrap();
        let g = Gauge::from_increments(vec![2.5, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let e = energy(&t, &g, &Flow::uniform_leaf(&t)).unwrap();
        assert!((e.energy - 2.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_binary_energy() {
        let t = Tree::regular(2, 2).unwrap();
        let g = Gauge::from_values(&[1.0, 2.0, 4.0]).unwrap();
        let e = energy(&t, &g, &Flow::uniform_leaf(&t)).unwrap();
        assert_eq!(e.level_square_sums, vec![1.0, 0.5, 0.25]);
        assert_eq!(e.energy, 2.0);
    }

    #[test]
    fn path_energy_is_top_value() {
        let t = Tree::path(3);
        let g = Gauge::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(energy(&t, &g, &Flow::uniform_leaf(&t)).unwrap().energy, 4.0);
    }

    #[test]
    fn energy_rejects_short_gauge() {
        let t = Tree::path(3);
        let g = Gauge::from_values(&[1.0, 2.0]).unwrap();
        assert!(matches!(energy(&t, &g, &Flow::uniform_leaf(&t)), Err(Error::HeightMismatch(_))));
    }

    #[test]
    fn energy_report_json_fields() {
        let t = Tree::regular(2, 1).unwrap();
        let g = Gauge::from_values(&[1.0, 2.0]).unwrap();
        let e = energy(&t, &g, &Flow::uniform_leaf(&t)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&e).unwrap();
        assert_eq!(v["gauge"], serde_json::json!([1.0, 1.0]));
        assert_eq!(v["S"], serde_json::json!([1.0, 0.5]));
        assert_eq!(v["energy"], serde_json::json!(1.5));
    }

    #[test]
    fn uniform_leaf_examples() {
        let t = Tree::regular(3, 3).unwrap();
        let u = Flow::uniform_leaf(&t);
        for v in 0..t.len() {
            assert!((u.weight(v) - 3f64.powi(-(t.depth(v) as i32))).abs() < 1e-15);
        }
        let s = u.level_square_sums(&t);
        for (n, s) in s.into_iter().enumerate() {
            assert!((s - 3f64.powi(-(n as i32))).abs() < 1e-15);
        }

        let t = Tree::from_preorder_str("2 1 0 2 0 0").unwrap();
        let u = Flow::uniform_leaf(&t);
        let third = 1.0 / 3.0;
        assert_eq!(u.leaf_weights(&t), &[third, third, third]);
        assert_eq!(&u.weights()[t.level(1)], &[third, 2.0 * third]);

        let p = Tree::path(4);
        assert!(Flow::uniform_leaf(&p).weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn flow_validation() {
        let t = Tree::regular(2, 1).unwrap();
        assert!(Flow::from_vertex_weights(&t, vec![1.0, 0.4, 0.4]).is_err());
        assert!(Flow::from_vertex_weights(&t, vec![1.0, 0.5, 0.5]).is_ok());
        assert!(Flow::from_leaf_weights(&t, &[0.5]).is_err());
        assert!(Flow::from_leaf_weights(&t, &[-0.5, 1.5]).is_err());
    }

    #[test]
    fn bound_stats_regular() {
        let t = Tree::regular(2, 6).unwrap();
        let s = flow_bound_stats(&t, &Flow::uniform_leaf(&t), &geometric_means(2.0, 6)).unwrap();
        assert!((s.constant - 1.0).abs() < 1e-12);
        assert!(s.profile.iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bound_stats_gw_finite() {
        let q = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
        let t = Tree::sample_gw(&q, 16, 5).unwrap();
        let s = flow_bound_stats(&t, &Flow::uniform_leaf(&t), &geometric_means(2.0, 16)).unwrap();
        assert!(s.constant.is_finite() && s.constant >= 1.0);
        assert_eq!(s.profile.len(), 17);
    }

    #[test]
    fn bounded_flow_on_regular_tree_is_uniform() {
        let two = OffspringLaw::deterministic(2).unwrap();
        let env = Environment::constant(two, 8);
        let t = Tree::regular(2, 8).unwrap();
        for k in 0..8 {
            let b = bounded_flow_bpve(&t, &env, k).unwrap();
            assert_eq!(b.surviving_leaves, 256);
            assert_eq!(b.flow, Flow::uniform_leaf(&t));
        }
        assert!(bounded_flow_bpve(&t, &env, 8).is_err());
    }

    #[test]
    fn bounded_flow_mostly_nonempty() {
        let q = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
        let env = Environment::constant(q.clone(), 12);
        let mut nonempty = 0;
        for seed in 0..500 {
            let t = Tree::sample_gw(&q, 12, seed).unwrap();
            match bounded_flow_bpve(&t, &env, 4) {
                Ok(b) => {
                    nonempty += 1;
                    assert!((b.flow.total() - 1.0).abs() < 1e-12);
                }
                Err(Error::EmptySupport { k: 4 }) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!(nonempty >= 475, "only {nonempty} of 500 nonempty");
    }
}
