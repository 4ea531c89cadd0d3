//! Finite rooted ordered trees of fixed height.
//!
//! Vertices are stored in level order, so each level `Γ_n` is a contiguous
//! index range and the children of a vertex are contiguous in the next level.
//! Every vertex above the bottom level has at least one child and every
//! vertex at the bottom level is a leaf.

mod codec;
mod law;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use law::{Environment, HeavyTailSpec, LawKind, LawSpec, OffspringLaw};

/// Default bound on the total number of vertices of a constructed tree.
pub const DEFAULT_VERTEX_CAP: usize = 10_000_000;

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    child_count: Vec<u32>,
    first_child: Vec<u32>,
    parent: Vec<u32>,
    /// `level_start[n]..level_start[n + 1]` is level `n`; length `height + 2`.
    level_start: Vec<usize>,
}

/// Level-by-level builder used by all constructors.
struct Builder {
    counts: Vec<u32>,
    level_start: Vec<usize>,
    cap: usize,
}

impl Builder {
    fn new(cap: usize) -> Self {
        Self { counts: Vec::new(), level_start: vec![0, 1], cap }
    }

    fn current_level(&self) -> Range<usize> {
        let n = self.level_start.len();
        self.level_start[n - 2]..self.level_start[n - 1]
    }

    /// Assign child counts to every vertex of the current (deepest) level.
    fn grow(&mut self, mut count_for: impl FnMut(usize) -> u32) -> Result<()> {
        let level = self.current_level();
        let mut next = 0usize;
        for v in level.clone() {
            let c = count_for(v);
            debug_assert!(c >= 1);
            next += c as usize;
            self.counts.push(c);
        }
        let total = level.end + next;
        if total > self.cap {
            return Err(Error::TooLarge {
                what: "tree vertices",
                needed: total as u128,
                cap: self.cap as u128,
            });
        }
        self.level_start.push(total);
        Ok(())
    }

    fn finish(mut self) -> Tree {
        let total = *self.level_start.last().unwrap();
        self.counts.resize(total, 0);
        Tree::from_parts(self.counts, self.level_start)
    }
}

impl Tree {
    fn from_parts(child_count: Vec<u32>, level_start: Vec<usize>) -> Self {
        let n = child_count.len();
        let mut first_child = vec![0u32; n];
        let mut parent = vec![NO_PARENT; n];
        let mut next = 1usize;
        for v in 0..n {
            first_child[v] = next as u32;
            parent[next..next + child_count[v] as usize].fill(v as u32);
            next += child_count[v] as usize;
        }
        Self { child_count, first_child, parent, level_start }
    }

    /// Build from child counts listed in level order.
    pub fn from_level_counts(counts: &[u32]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Parse { offset: 0, message: "empty child-count list".into() });
        }
        let mut level_start = vec![0usize, 1];
        loop {
            let n = level_start.len();
            let level = level_start[n - 2]..level_start[n - 1];
            if level.end > counts.len() {
                return Err(Error::Parse {
                    offset: counts.len(),
                    message: "child-count list ends inside a level".into(),
                });
            }
            let slice = &counts[level.clone()];
            let leaves = slice.iter().filter(|&&c| c == 0).count();
            if leaves == slice.len() {
                if level.end != counts.len() {
                    return Err(Error::Parse {
                        offset: level.end,
                        message: "trailing entries after the bottom level".into(),
                    });
                }
                return Ok(Self::from_parts(counts.to_vec(), level_start));
            }
            if leaves != 0 {
                return Err(Error::InvalidArgument(format!(
                    "level {} mixes leaves and internal vertices",
                    n - 2
                )));
            }
            let next: usize = slice.iter().map(|&c| c as usize).sum();
            level_start.push(level.end + next);
        }
    }

    /// Single vertex.
    pub fn root_only() -> Self {
        Self::from_parts(vec![0], vec![0, 1])
    }

    /// Path of height `n`.
    pub fn path(n: usize) -> Self {
        Self::regular(1, n).expect("path fits")
    }

    /// Every internal vertex has `b` children.
    pub fn regular(b: u32, height: usize) -> Result<Self> {
        Self::spherical(&vec![b; height])
    }

    /// Spherically symmetric tree: every vertex at level `n` has
    /// `child_counts[n]` children.
    pub fn spherical(child_counts: &[u32]) -> Result<Self> {
        Self::spherical_with_cap(child_counts, DEFAULT_VERTEX_CAP)
    }

    pub fn spherical_with_cap(child_counts: &[u32], cap: usize) -> Result<Self> {
        if let Some(n) = child_counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidArgument(format!("child count at level {n} is zero")));
        }
        let mut b = Builder::new(cap);
        for &c in child_counts {
            b.grow(|_| c)?;
        }
        Ok(b.finish())
    }

    /// Galton-Watson tree of the given height.
    pub fn sample_gw(law: &OffspringLaw, height: usize, seed: u64) -> Result<Self> {
        Self::sample_gw_with_cap(law, height, seed, DEFAULT_VERTEX_CAP)
    }

    pub fn sample_gw_with_cap(law: &OffspringLaw, height: usize, seed: u64, cap: usize) -> Result<Self> {
        let mut r = rng::rng(seed);
        let mut b = Builder::new(cap);
        for _ in 0..height {
            b.grow(|_| law.sample(&mut r))?;
        }
        Ok(b.finish())
    }

    /// Branching process in a varying environment: generation-`n` vertices
    /// draw their child counts from `env.laws()[n]`.
    pub fn sample_bpve(env: &Environment, height: usize, seed: u64) -> Result<Self> {
        Self::sample_bpve_with_cap(env, height, seed, DEFAULT_VERTEX_CAP)
    }

    pub fn sample_bpve_with_cap(env: &Environment, height: usize, seed: u64, cap: usize) -> Result<Self> {
        if env.len() < height {
            return Err(Error::EnvironmentTooShort { available: env.len(), requested: height });
        }
        let mut r = rng::rng(seed);
        let mut b = Builder::new(cap);
        for law in &env.laws()[..height] {
            b.grow(|_| law.sample(&mut r))?;
        }
        Ok(b.finish())
    }

    /// Spherically symmetric tree whose level sizes dominate `scale * M_n`.
    ///
    /// `|T_n|` is the least integer multiple of `|T_{n-1}|` that is at least
    /// `scale * M_n`, hence `scale * M_n <= |T_n| <= 2 * scale * M_n` for `n >= 1`.
    pub fn dominating_spherical(means: &[f64], scale: f64) -> Result<Self> {
        Self::dominating_spherical_with_cap(means, scale, DEFAULT_VERTEX_CAP)
    }

    pub fn dominating_spherical_with_cap(means: &[f64], scale: f64, cap: usize) -> Result<Self> {
        let counts = dominating_child_counts(means, scale, cap)?;
        Self::spherical_with_cap(&counts, cap)
    }

    pub fn height(&self) -> usize {
        self.level_start.len() - 2
    }

    /// Total number of vertices.
    pub fn len(&self) -> usize {
        self.child_count.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn level(&self, n: usize) -> Range<usize> {
        self.level_start[n]..self.level_start[n + 1]
    }

    pub fn leaves(&self) -> Range<usize> {
        self.level(self.height())
    }

    pub fn level_size(&self, n: usize) -> usize {
        self.level_start[n + 1] - self.level_start[n]
    }

    /// `Z_0, ..., Z_N`.
    pub fn level_sizes(&self) -> Vec<usize> {
        (0..=self.height()).map(|n| self.level_size(n)).collect()
    }

    pub fn child_count(&self, v: usize) -> u32 {
        self.child_count[v]
    }

    pub fn child_counts(&self) -> &[u32] {
        &self.child_count
    }

    pub fn children(&self, v: usize) -> Range<usize> {
        let start = self.first_child[v] as usize;
        start..start + self.child_count[v] as usize
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        match self.parent[v] {
            NO_PARENT => None,
            p => Some(p as usize),
        }
    }

    pub fn depth(&self, v: usize) -> usize {
        self.level_start.partition_point(|&s| s <= v) - 1
    }

    /// Ancestor of `v` at level `n` (`n <= depth(v)`).
    pub fn ancestor_at(&self, mut v: usize, n: usize) -> usize {
        let mut d = self.depth(v);
        assert!(n <= d, "level {n} is below vertex depth {d}");
        while d > n {
            v = self.parent[v] as usize;
            d -= 1;
        }
        v
    }

    /// Depth of the deepest common ancestor of two vertices.
    pub fn meet_depth(&self, mut u: usize, mut v: usize) -> usize {
        let (mut du, mut dv) = (self.depth(u), self.depth(v));
        while du > dv {
            u = self.parent[u] as usize;
            du -= 1;
        }
        while dv > du {
            v = self.parent[v] as usize;
            dv -= 1;
        }
        while u != v {
            u = self.parent[u] as usize;
            v = self.parent[v] as usize;
            du -= 1;
        }
        du
    }

    /// Largest number of children among vertices at level `n`.
    pub fn max_children_at(&self, n: usize) -> u32 {
        self.level(n).map(|v| self.child_count[v]).max().unwrap_or(0)
    }

    pub fn is_spherically_symmetric(&self) -> bool {
        (0..self.height()).all(|n| {
            let lvl = self.level(n);
            let c = self.child_count[lvl.start];
            self.child_count[lvl].iter().all(|&x| x == c)
        })
    }

    /// Per-level child counts of a spherically symmetric tree.
    pub fn spherical_profile(&self) -> Option<Vec<u32>> {
        self.is_spherically_symmetric()
            .then(|| (0..self.height()).map(|n| self.child_count[self.level_start[n]]).collect())
    }

    /// Number of bottom-level descendants of every vertex (`Z_N(σ)`).
    pub fn leaf_descendants(&self) -> Vec<u64> {
        let mut below = vec![0u64; self.len()];
        for v in self.leaves() {
            below[v] = 1;
        }
        for v in (0..self.leaves().start).rev() {
            below[v] = self.children(v).map(|c| below[c]).sum();
        }
        below
    }

    /// The tree cut at level `height` (keeps levels `0..=height`).
    pub fn truncate(&self, height: usize) -> Self {
        assert!(height <= self.height());
        let end = self.level_start[height + 1];
        let mut counts = self.child_count[..end].to_vec();
        for c in &mut counts[self.level_start[height]..] {
            *c = 0;
        }
        Self::from_parts(counts, self.level_start[..height + 2].to_vec())
    }

    /// Level sizes and the growth constants relative to a mean profile.
    pub fn stats(&self, means: &[f64]) -> Result<TreeStats> {
        tree_stats(self, means)
    }
}

/// Per-level child counts of the spherically symmetric dominating tree.
pub fn dominating_child_counts(means: &[f64], scale: f64, cap: usize) -> Result<Vec<u32>> {
    if means.first() != Some(&1.0) {
        return Err(Error::InvalidArgument("mean profile must start with M_0 = 1".into()));
    }
    if means.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidArgument("mean profile must be nondecreasing".into()));
    }
    if !(scale >= 1.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be >= 1, got {scale}")));
    }
    let mut counts = Vec::with_capacity(means.len().saturating_sub(1));
    let mut prev: u128 = 1;
    let mut total: u128 = 1;
    for &m in &means[1..] {
        let target = scale * m;
        let mut k = (target / prev as f64).ceil().max(1.0) as u128;
        // guard against rounding in the division
        while ((k * prev) as f64) < target {
            k += 1;
        }
        while k > 1 && (((k - 1) * prev) as f64) >= target {
            k -= 1;
        }
        let size = k * prev;
        total += size;
        if total > cap as u128 || k > u32::MAX as u128 {
            return Err(Error::TooLarge { what: "dominating tree vertices", needed: total, cap: cap as u128 });
        }
        counts.push(k as u32);
        prev = size;
    }
    Ok(counts)
}

/// Level statistics of a tree relative to a mean profile `M_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub height: usize,
    pub level_sizes: Vec<usize>,
    /// `max_n Z_n / M_n`.
    pub growth_constant: f64,
    /// `Z_N / M_N`.
    pub martingale: f64,
}

pub fn tree_stats(tree: &Tree, means: &[f64]) -> Result<TreeStats> {
    let n = tree.height();
    if means.len() < n + 1 {
        return Err(Error::HeightMismatch(format!(
            "mean profile has {} entries, tree needs {}",
            means.len(),
            n + 1
        )));
    }
    if means[0] != 1.0 || means[..=n].iter().any(|&m| !(m > 0.0)) {
        return Err(Error::InvalidArgument("mean profile must have M_0 = 1 and M_n > 0".into()));
    }
    let level_sizes = tree.level_sizes();
    let growth_constant = level_sizes
        .iter()
        .zip(means)
        .map(|(&z, &m)| z as f64 / m)
        .fold(0.0, f64::max);
    Ok(TreeStats {
        height: n,
        martingale: level_sizes[n] as f64 / means[n],
        level_sizes,
        growth_constant,
    })
}

/// `m^0, m^1, ..., m^n`.
pub fn geometric_means(m: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| m.powi(k as i32)).collect()
}
