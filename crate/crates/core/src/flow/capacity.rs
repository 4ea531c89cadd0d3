use serde::{Deserialize, Serialize};

use super::frank_wolfe::{self, FwOptions, FwSolution, SimplexQuadratic};
use super::{Flow, Gauge};
use crate::error::{Error, Result};
use crate::tree::Tree;

/// Capacity of a tree in a gauge, with the energy-minimizing unit flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    /// `1 / min energy`; `f64::INFINITY` when the minimal energy is zero.
    pub value: f64,
    pub infinite: bool,
    pub min_energy: f64,
    pub flow: Flow,
}

/// Effective resistance below every vertex: zero at leaves, otherwise the
/// parallel combination over children `τ` of `h(|τ|) + R(τ)`.
fn subtree_resistances(tree: &Tree, gauge: &Gauge) -> Vec<f64> {
    let h = gauge.increments();
    let mut r = vec![0.0; tree.len()];
    for v in (0..tree.leaves().start).rev() {
        let level = tree.depth(v) + 1;
        let mut conductance = 0.0;
        let mut shorted = false;
        for c in tree.children(v) {
            let branch = h[level] + r[c];
            if branch == 0.0 {
                shorted = true;
                break;
            }
            conductance += 1.0 / branch;
        }
        r[v] = if shorted { 0.0 } else { 1.0 / conductance };
    }
    r
}

/// Exact gauge capacity by series/parallel reduction.
///
/// The minimizing flow splits at each vertex in proportion to branch
/// conductance; branches of zero resistance share the flow equally.
pub fn capacity(tree: &Tree, gauge: &Gauge) -> Result<Capacity> {
    if gauge.height() < tree.height() {
        return Err(Error::HeightMismatch(format!(
            "gauge of height {} on a tree of height {}",
            gauge.height(),
            tree.height()
        )));
    }
    let h = gauge.increments();
    let r = subtree_resistances(tree, gauge);
    let mut weights = vec![0.0; tree.len()];
    weights[0] = 1.0;
    for v in 0..tree.leaves().start {
        let level = tree.depth(v) + 1;
        let kids = tree.children(v);
        if r[v] == 0.0 {
            let zero: Vec<usize> = kids.filter(|&c| h[level] + r[c] == 0.0).collect();
            if zero.is_empty() {
                // unreachable: R(v) = 0 requires a shorted branch
                return Err(Error::InvalidGauge("inconsistent zero resistance".into()));
            }
            let share = weights[v] / zero.len() as f64;
            for c in zero {
                weights[c] = share;
            }
        } else {
            for c in kids {
                weights[c] = weights[v] * r[v] / (h[level] + r[c]);
            }
        }
    }
    let min_energy = h[0] + r[0];
    let flow = Flow { weights };
    if min_energy == 0.0 {
        return Ok(Capacity { value: f64::INFINITY, infinite: true, min_energy, flow });
    }
    Ok(Capacity { value: 1.0 / min_energy, infinite: false, min_energy, flow })
}

/// The leaf kernel `K(x, y) = f(|x ∧ y|)` of a tree and gauge, as a quadratic
/// form on measures over the bottom level.
pub struct LeafKernel<'a> {
    tree: &'a Tree,
    gauge: &'a Gauge,
    values: Vec<f64>,
    leaves: Vec<usize>,
}

impl<'a> LeafKernel<'a> {
    pub fn new(tree: &'a Tree, gauge: &'a Gauge) -> Result<Self> {
        if gauge.height() < tree.height() {
            return Err(Error::HeightMismatch("gauge shorter than tree".into()));
        }
        Ok(Self { tree, gauge, values: gauge.values(), leaves: tree.leaves().collect() })
    }
}

impl SimplexQuadratic for LeafKernel<'_> {
    fn dim(&self) -> usize {
        self.leaves.len()
    }

    fn apply(&self, w: &[f64]) -> Vec<f64> {
        let flow = Flow::from_leaf_weights(self.tree, w).expect("simplex weights");
        let h = self.gauge.increments();
        let mut potential = vec![0.0; self.tree.len()];
        potential[0] = h[0] * flow.weights[0];
        for v in 1..self.tree.len() {
            let p = self.tree.parent(v).expect("non-root");
            potential[v] = potential[p] + h[self.tree.depth(v)] * flow.weights[v];
        }
        potential.drain(self.tree.leaves()).collect()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.values[self.tree.meet_depth(self.leaves[i], self.leaves[j])]
    }
}

/// Capacity by direct convex minimization over leaf measures. Independent
/// of the conductance recursion; used to cross-check it.
pub fn capacity_frank_wolfe(tree: &Tree, gauge: &Gauge, options: FwOptions) -> Result<(f64, FwSolution)> {
    let kernel = LeafKernel::new(tree, gauge)?;
    let sol = frank_wolfe::minimize(&kernel, options);
    Ok((1.0 / sol.value, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::energy;

    #[test]
    fn binary_depth_one() {
        let t = Tree::regular(2, 1).unwrap();
        let g = Gauge::from_values(&[1.0, 2.0]).unwrap();
        let c = capacity(&t, &g).unwrap();
        assert!((c.value - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(&c.flow.weights()[1..], &[0.5, 0.5]);
    }

    #[test]
    fn binary_depth_two() {
        let t = Tree::regular(2, 2).unwrap();
        let g = Gauge::from_values(&[1.0, 2.0, 4.0]).unwrap();
        let c = capacity(&t, &g).unwrap();
        assert!((c.value - 0.5).abs() < 1e-15);
        assert_eq!(c.flow, Flow::uniform_leaf(&t));
    }

    #[test]
    fn path_capacity_is_reciprocal_top_value() {
        let t = Tree::path(4);
        let g = Gauge::from_values(&[0.5, 1.0, 3.0, 3.5, 7.0]).unwrap();
        assert!((capacity(&t, &g).unwrap().value - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn all_zero_gauge_is_infinite() {
        let t = Tree::regular(2, 3).unwrap();
        let g = Gauge::from_increments(vec![0.0; 4]).unwrap();
        let c = capacity(&t, &g).unwrap();
        assert!(c.infinite && c.value.is_infinite());
        assert!((c.flow.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_increments_are_merged_exactly() {
        // h = (1, 0, 2): level-1 resistors vanish
        let t = Tree::from_preorder_str("2 1 0 2 0 0").unwrap();
        let g = Gauge::from_increments(vec![1.0, 0.0, 2.0]).unwrap();
        let c = capacity(&t, &g).unwrap();
        // left branch 2 ohm, right branch 1 ohm, parallel 2/3, plus 1 at the root
        assert!((c.min_energy - 5.0 / 3.0).abs() < 1e-15);
        let e = energy(&t, &g, &c.flow).unwrap().energy;
        assert!((e * c.value - 1.0).abs() < 1e-12);

        // zero-resistance leaves: all mass can sit on a shorted branch
        let g = Gauge::from_increments(vec![1.0, 0.0, 0.0]).unwrap();
        let c = capacity(&t, &g).unwrap();
        assert_eq!(c.value, 1.0);
        assert!((c.flow.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frank_wolfe_agrees_on_small_cases() {
        let t = Tree::from_preorder_str("3 1 0 2 0 0 3 0 0 0").unwrap();
        let g = Gauge::from_values(&[1.0, 1.5, 4.0]).unwrap();
        let exact = capacity(&t, &g).unwrap().value;
        let (fw, sol) = capacity_frank_wolfe(&t, &g, FwOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((fw - exact).abs() < 1e-7 * exact, "{fw} vs {exact}");
    }
}
