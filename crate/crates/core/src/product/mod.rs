//! The product tree `Γ × b^N` and its kernel
//! `K((α, x), (β, y)) = b^{|α∧β|} 1{|x∧y| >= |α∧β|}` on boundary pairs,
//! together with the comparison bounds built on it.

mod bounds;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::frank_wolfe::{self, FwOptions, SimplexQuadratic};
use crate::flow::Flow;
use crate::target::TargetTrie;
use crate::tree::Tree;

pub use bounds::{
    bpve_dominates, compare_spherical, psi_phi_capacities, regularity_bounds, BoundFlags, DominationRecord,
    DominationReport, PsiPhiReport, RegularityReport, SphericalReport,
};

/// Default cap on boundary pairs `|∂Γ| × |B|`.
pub const PRODUCT_CAP: usize = 1_000_000;

/// The boundary `∂Γ × B` of the product tree with the ancestor maps needed
/// to evaluate the kernel level by level. Nothing else is materialized.
pub struct ProductTree<'a> {
    tree: &'a Tree,
    b: u32,
    words: Vec<Vec<u32>>,
    /// `leaf_anc[k][i]`: position within level `k` of the ancestor of leaf `i`.
    leaf_anc: Vec<Vec<usize>>,
    /// `word_pre[k][w]`: index of the length-`k` prefix of word `w`.
    word_pre: Vec<Vec<usize>>,
    prefix_counts: Vec<usize>,
}

impl<'a> ProductTree<'a> {
    pub fn new(tree: &'a Tree, trie: &TargetTrie) -> Result<Self> {
        Self::with_cap(tree, trie, PRODUCT_CAP)
    }

    pub fn with_cap(tree: &'a Tree, trie: &TargetTrie, cap: usize) -> Result<Self> {
        let n = tree.height();
        if trie.depth() != n {
            return Err(Error::HeightMismatch(format!("target of depth {} on a tree of height {n}", trie.depth())));
        }
        let size = tree.level_size(n) as u128 * trie.word_count();
        if size > cap as u128 {
            return Err(Error::TooLarge { what: "product boundary pairs", needed: size, cap: cap as u128 });
        }
        let words = trie.words()?;
        let leaf_anc = (0..=n)
            .map(|k| tree.leaves().map(|v| tree.ancestor_at(v, k) - tree.level(k).start).collect())
            .collect();
        let mut word_pre = vec![vec![0; words.len()]; n + 1];
        let mut prefix_counts = vec![0; n + 1];
        for k in 0..=n {
            // words are sorted, so equal prefixes are consecutive
            let mut id = 0;
            for w in 0..words.len() {
                if w > 0 && words[w][..k] != words[w - 1][..k] {
                    id += 1;
                }
                word_pre[k][w] = id;
            }
            prefix_counts[k] = if words.is_empty() { 0 } else { id + 1 };
        }
        Ok(Self { tree, b: trie.alphabet(), words, leaf_anc, word_pre, prefix_counts })
    }

    pub fn tree(&self) -> &Tree {
        self.tree
    }

    pub fn words(&self) -> &[Vec<u32>] {
        &self.words
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_anc[0].len()
    }

    /// Number of boundary pairs; atom `(i, w)` has index `i * |B| + w`.
    pub fn boundary_len(&self) -> usize {
        self.leaf_count() * self.words.len()
    }

    fn height(&self) -> usize {
        self.tree.height()
    }

    /// `K` between atoms.
    pub fn kernel(&self, a: usize, c: usize) -> f64 {
        let nw = self.words.len();
        let (i, x) = (a / nw, a % nw);
        let (j, y) = (c / nw, c % nw);
        let n = self.height();
        let tree_meet = (0..=n).rev().find(|&k| self.leaf_anc[k][i] == self.leaf_anc[k][j]).unwrap_or(0);
        let word_meet = (0..=n).rev().find(|&k| self.word_pre[k][x] == self.word_pre[k][y]).unwrap_or(0);
        if word_meet >= tree_meet {
            (self.b as f64).powi(tree_meet as i32)
        } else {
            0.0
        }
    }

    /// `F_k(σ, z)` (mass below the product vertex) for every level, and
    /// `H_k(τ, z)` = mass below `τ` on level `k + 1` and `z` on level `k`.
    fn masses(&self, weights: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.height();
        let nw = self.words.len();
        let mut f = vec![Vec::new(); n + 1];
        let mut h = vec![Vec::new(); n];
        f[n] = weights.to_vec();
        for k in (0..n).rev() {
            let (rows_below, cols_below) = (self.tree.level_size(k + 1), self.prefix_counts[k + 1]);
            let (rows, cols) = (self.tree.level_size(k), self.prefix_counts[k]);
            let mut hk = vec![0.0; rows_below * cols];
            // collapse word prefixes k+1 -> k
            let pre_map: Vec<usize> = {
                let mut m = vec![0; cols_below];
                for w in 0..nw {
                    m[self.word_pre[k + 1][w]] = self.word_pre[k][w];
                }
                m
            };
            for r in 0..rows_below {
                for z in 0..cols_below {
                    hk[r * cols + pre_map[z]] += f[k + 1][r * cols_below + z];
                }
            }
            let level_below = self.tree.level(k + 1).start;
            let level_here = self.tree.level(k).start;
            let mut fk = vec![0.0; rows * cols];
            for r in 0..rows_below {
                let parent = self.tree.parent(level_below + r).expect("non-root") - level_here;
                for z in 0..cols {
                    fk[parent * cols + z] += hk[r * cols + z];
                }
            }
            f[k] = fk;
            h[k] = hk;
        }
        (f, h)
    }

    /// Potentials `(K μ)(α, x) = Σ_k b^k [F_k(α_k, x_k) - H_k(α_{k+1}, x_k)]`.
    fn potentials(&self, weights: &[f64]) -> Vec<f64> {
        let n = self.height();
        let nw = self.words.len();
        let (f, h) = self.masses(weights);
        let mut out = vec![0.0; weights.len()];
        for (a, g) in out.iter_mut().enumerate() {
            let (i, x) = (a / nw, a % nw);
            let mut scale = 1.0;
            for k in 0..=n {
                let cols = self.prefix_counts[k];
                let z = self.word_pre[k][x];
                let mut term = f[k][self.leaf_anc[k][i] * cols + z];
                if k < n {
                    term -= h[k][self.leaf_anc[k + 1][i] * cols + z];
                }
                *g += scale * term;
                scale *= self.b as f64;
            }
        }
        out
    }
}

impl SimplexQuadratic for ProductTree<'_> {
    fn dim(&self) -> usize {
        self.boundary_len()
    }

    fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.potentials(w)
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.kernel(i, j)
    }
}

/// A measure on `∂Γ × B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductFlow {
    /// Weights of all boundary pairs, leaf-major.
    Dense(Vec<f64>),
    /// `(U × θ)(σ, x) = U(σ) θ(x)` with `θ` given on the words of `B`.
    Rank1 { u: Flow, theta: Vec<f64> },
}

impl ProductFlow {
    pub fn uniform(pt: &ProductTree) -> Self {
        let nw = pt.words.len();
        ProductFlow::Rank1 { u: Flow::uniform_leaf(pt.tree), theta: vec![1.0 / nw as f64; nw] }
    }

    pub fn to_dense(&self, pt: &ProductTree) -> Result<Vec<f64>> {
        self.check(pt)?;
        Ok(match self {
            ProductFlow::Dense(w) => w.clone(),
            ProductFlow::Rank1 { u, theta } => {
                u.leaf_weights(pt.tree).iter().flat_map(|&a| theta.iter().map(move |&t| a * t)).collect()
            }
        })
    }

    fn check(&self, pt: &ProductTree) -> Result<()> {
        let bad = |w: &[f64]| w.iter().any(|x| !(*x >= 0.0) || !x.is_finite());
        match self {
            ProductFlow::Dense(w) => {
                if w.len() != pt.boundary_len() || bad(w) {
                    return Err(Error::InvalidFlow(format!(
                        "dense product flow needs {} nonnegative weights",
                        pt.boundary_len()
                    )));
                }
            }
            ProductFlow::Rank1 { u, theta } => {
                u.check_tree(pt.tree)?;
                if theta.len() != pt.words.len() || bad(theta) {
                    return Err(Error::InvalidFlow(format!("θ needs {} nonnegative word weights", pt.words.len())));
                }
            }
        }
        Ok(())
    }
}

/// Word-tree level sums `S_k(θ)` for a measure on the words.
fn word_square_sums(pt: &ProductTree, theta: &[f64]) -> Vec<f64> {
    (0..=pt.height())
        .map(|k| {
            let mut mass = vec![0.0; pt.prefix_counts[k]];
            for (w, &t) in theta.iter().enumerate() {
                mass[pt.word_pre[k][w]] += t;
            }
            mass.iter().map(|m| m * m).sum()
        })
        .collect()
}

/// `E_K(μ)`. Dense flows go through the level masses; rank-one flows use
/// `Σ_k S_k(U) [b^k S_k(θ) - b^{k-1} S_{k-1}(θ)]`.
pub fn kernel_energy(pt: &ProductTree, flow: &ProductFlow) -> Result<f64> {
    flow.check(pt)?;
    match flow {
        ProductFlow::Dense(w) => {
            let (f, h) = pt.masses(w);
            let b = pt.b as f64;
            let mut e = 0.0;
            for k in 0..=pt.height() {
                let mut level: f64 = f[k].iter().map(|x| x * x).sum();
                if k < pt.height() {
                    level -= h[k].iter().map(|x| x * x).sum::<f64>();
                }
                e += b.powi(k as i32) * level;
            }
            Ok(e)
        }
        ProductFlow::Rank1 { u, theta } => {
            let su = u.level_square_sums(pt.tree);
            let st = word_square_sums(pt, theta);
            let b = pt.b as f64;
            Ok((0..su.len())
                .map(|k| {
                    let prev = if k > 0 { b.powi(k as i32 - 1) * st[k - 1] } else { 0.0 };
                    su[k] * (b.powi(k as i32) * st[k] - prev)
                })
                .sum())
        }
    }
}

/// Rank-one energy as the double sum over word pairs
/// `Σ_{x,y} θ(x) θ(y) Σ_{i <= |x∧y|} b^i (S_i(U) - S_{i+1}(U))`.
pub fn kernel_energy_factored(pt: &ProductTree, u: &Flow, theta: &[f64]) -> Result<f64> {
    ProductFlow::Rank1 { u: u.clone(), theta: theta.to_vec() }.check(pt)?;
    let su = u.level_square_sums(pt.tree);
    let n = pt.height();
    let b = pt.b as f64;
    let mut cumulative = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for i in 0..=n {
        let next = if i < n { su[i + 1] } else { 0.0 };
        acc += b.powi(i as i32) * (su[i] - next);
        cumulative.push(acc);
    }
    let mut e = 0.0;
    for (x, &tx) in theta.iter().enumerate() {
        for (y, &ty) in theta.iter().enumerate() {
            let meet = (0..=n).rev().find(|&k| pt.word_pre[k][x] == pt.word_pre[k][y]).unwrap_or(0);
            e += tx * ty * cumulative[meet];
        }
    }
    Ok(e)
}

/// Kernel capacity of `∂Γ × B` with the minimizing measure as certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCapacity {
    /// `1 / E_K(weights)`; 0 when `B` is empty.
    pub value: f64,
    pub energy: f64,
    /// Frank-Wolfe lower bound on the minimal energy.
    pub energy_lower_bound: f64,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KernelCapacity {
    /// Upper bound on the true capacity implied by the duality gap.
    pub fn upper_bound(&self) -> f64 {
        if self.energy_lower_bound > 0.0 {
            1.0 / self.energy_lower_bound
        } else {
            f64::INFINITY
        }
    }
}

pub fn cap_k(pt: &ProductTree, options: FwOptions) -> Result<KernelCapacity> {
    if pt.boundary_len() == 0 {
        return Ok(KernelCapacity {
            value: 0.0,
            energy: f64::INFINITY,
            energy_lower_bound: f64::INFINITY,
            weights: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }
    let sol = frank_wolfe::minimize(pt, options);
    Ok(KernelCapacity {
        value: 1.0 / sol.value,
        energy: sol.value,
        energy_lower_bound: sol.lower_bound,
        weights: sol.weights,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Solver settings for kernel capacities.
pub fn cap_k_options() -> FwOptions {
    FwOptions { tolerance: 1e-6, max_iterations: 100_000 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::target_exact;

    #[test]
    fn height_zero_kernel_is_one() {
        let t = Tree::root_only();
        let pt = ProductTree::new(&t, &TargetTrie::all(2, 0)).unwrap();
        assert_eq!(kernel_energy(&pt, &ProductFlow::uniform(&pt)).unwrap(), 1.0);
        assert_eq!(kernel_energy(&pt, &ProductFlow::Dense(vec![1.0])).unwrap(), 1.0);
    }

    #[test]
    fn path_with_both_letters() {
        let t = Tree::path(1);
        let pt = ProductTree::new(&t, &TargetTrie::all(2, 1)).unwrap();
        let flow = ProductFlow::uniform(&pt);
        assert!((kernel_energy(&pt, &flow).unwrap() - 1.0).abs() < 1e-15);
        let dense = ProductFlow::Dense(flow.to_dense(&pt).unwrap());
        assert!((kernel_energy(&pt, &dense).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pt.kernel(0, 0), 2.0);
        assert_eq!(pt.kernel(0, 1), 0.0);
    }

    #[test]
    fn factored_and_by_parts_agree() {
        let t = Tree::from_preorder_str("3 1 2 0 0 2 1 0 1 0 1 1 0").unwrap();
        let trie = TargetTrie::random(2, 3, 0.6, 2).unwrap();
        let pt = ProductTree::new(&t, &trie).unwrap();
        let u = Flow::uniform_leaf(&t);
        let theta: Vec<f64> = (0..pt.words().len()).map(|i| (i + 1) as f64).collect();
        let s: f64 = theta.iter().sum();
        let theta: Vec<f64> = theta.iter().map(|x| x / s).collect();
        let a = kernel_energy(&pt, &ProductFlow::Rank1 { u: u.clone(), theta: theta.clone() }).unwrap();
        let b = kernel_energy_factored(&pt, &u, &theta).unwrap();
        let dense = ProductFlow::Dense(ProductFlow::Rank1 { u, theta }.to_dense(&pt).unwrap());
        let c = kernel_energy(&pt, &dense).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        assert!((a - c).abs() < 1e-12 * a);
    }

    #[test]
    fn sandwich_on_single_letter() {
        let t = Tree::regular(2, 1).unwrap();
        let trie = TargetTrie::from_words(2, 1, &[vec![0]]).unwrap();
        let pt = ProductTree::new(&t, &trie).unwrap();
        let cap = cap_k(&pt, cap_k_options()).unwrap();
        let p = target_exact(&t, &trie).unwrap();
        assert!(cap.converged);
        assert!(cap.value <= p && p <= 4.0 * cap.value, "{} {p}", cap.value);
    }

    #[test]
    fn empty_target_has_zero_capacity() {
        let t = Tree::regular(2, 2).unwrap();
        let pt = ProductTree::new(&t, &TargetTrie::empty(2, 2)).unwrap();
        assert_eq!(cap_k(&pt, cap_k_options()).unwrap().value, 0.0);
    }

    #[test]
    fn product_cap_is_enforced() {
        let t = Tree::regular(2, 4).unwrap();
        assert!(ProductTree::with_cap(&t, &TargetTrie::all(2, 4), 100).is_err());
    }
}
