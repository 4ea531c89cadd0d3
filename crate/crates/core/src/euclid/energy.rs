use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cantor_sample, CubeLabeling, EuclidGauge};
use crate::error::{Error, Result};
use crate::flow::{capacity, energy, flow_bound_stats, Flow, Gauge};
use crate::tree::{geometric_means, tree_stats, OffspringLaw, Tree};

/// Relative slack for comparisons that hold with equality in exact arithmetic.
const SLACK: f64 = 1e-12;

/// `Σ_{x,y} g(max(|R(x) - R(y)|, b^-N)) θ(x) θ(y)` over leaf pairs, distances
/// measured between cube anchors. Rows are summed in parallel and reduced in
/// leaf order.
pub fn euclid_energy(tree: &Tree, labeling: &CubeLabeling, flow: &Flow, g: &EuclidGauge) -> Result<f64> {
    flow.check_tree(tree)?;
    g.validate()?;
    let d = labeling.d();
    let floor = (labeling.b() as f64).powi(-(tree.height() as i32));
    let coords = labeling.integer_coords(tree);
    let atoms: Vec<(f64, &[u64])> = tree
        .leaves()
        .filter(|&v| flow.weight(v) > 0.0)
        .map(|v| (flow.weight(v), &coords[v * d..(v + 1) * d]))
        .collect();
    // the kernel depends only on the integer squared distance
    let reach = (labeling.b() as u64).saturating_pow(tree.height() as u32);
    let max_sq = reach.saturating_mul(reach).saturating_mul(d as u64);
    let table: Option<Vec<f64>> = (max_sq < 1 << 22)
        .then(|| (0..=max_sq).map(|sq| g.eval(floor * (sq as f64).sqrt().max(1.0))).collect());
    let kernel = |sq: u64| match &table {
        Some(t) => t[sq as usize],
        None => g.eval(floor * (sq as f64).sqrt().max(1.0)),
    };
    let rows: Vec<f64> = atoms
        .par_iter()
        .map(|&(wx, x)| {
            let mut row = 0.0;
            for &(wy, y) in &atoms {
                let sq: u64 = x.iter().zip(y).map(|(&a, &b)| a.abs_diff(b).pow(2)).sum();
                row += kernel(sq) * wy;
            }
            wx * row
        })
        .collect();
    Ok(rows.iter().sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeEnergyReport {
    pub b: u32,
    pub d: usize,
    pub height: usize,
    /// Largest number of same-level cubes meeting one cube, itself included, per level.
    pub max_neighbors: Vec<usize>,
    pub neighbor_bound: usize,
    pub neighbors_ok: bool,
    /// `max_k S_{k-1} / (b^d S_k)`.
    pub worst_square_sum_ratio: f64,
    pub worst_square_sum_level: Option<usize>,
    pub square_sums_ok: bool,
    pub tree_energy: f64,
    pub euclid_energy: f64,
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub ratio_ok: bool,
}

impl CubeEnergyReport {
    pub fn ok(&self) -> bool {
        self.neighbors_ok && self.square_sums_ok && self.ratio_ok
    }
}

/// Least `l` with `b^l >= sqrt(d)`.
pub(crate) fn diagonal_depth(b: u32, d: usize) -> u32 {
    let mut l = 0;
    while (b as u128).pow(2 * l) < d as u128 {
        l += 1;
    }
    l
}

fn max_neighbors(tree: &Tree, coords: &[u64], d: usize) -> Vec<usize> {
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let o = (k % 3) as i64 - 1;
                    k /= 3;
                    o
                })
                .collect()
        })
        .collect();
    (0..=tree.height())
        .map(|n| {
            let cells: HashSet<&[u64]> = tree.level(n).map(|v| &coords[v * d..(v + 1) * d]).collect();
            let mut probe = vec![0u64; d];
            tree.level(n)
                .map(|v| {
                    let x = &coords[v * d..(v + 1) * d];
                    offsets
                        .iter()
                        .filter(|o| {
                            for i in 0..d {
                                match x[i].checked_add_signed(o[i]) {
                                    Some(c) => probe[i] = c,
                                    None => return false,
                                }
                            }
                            cells.contains(probe.as_slice())
                        })
                        .count()
                })
                .max()
                .unwrap_or(0)
        })
        .collect()
}

/// Compare the floored Euclidean energy with the tree energy in the gauge
/// `f(n) = g(b^-n)`, and check the two combinatorial facts behind the
/// comparison.
pub fn cube_energy_check(tree: &Tree, labeling: &CubeLabeling, flow: &Flow, g: &EuclidGauge) -> Result<CubeEnergyReport> {
    let (b, d) = (labeling.b(), labeling.d());
    if d > 12 {
        return Err(Error::TooLarge { what: "neighbor offsets", needed: 3u128.pow(d as u32), cap: 3u128.pow(12) });
    }
    let coords = labeling.integer_coords(tree);
    let max_neighbors = max_neighbors(tree, &coords, d);
    let neighbor_bound = 3usize.pow(d as u32);
    let neighbors_ok = max_neighbors.iter().all(|&c| c <= neighbor_bound);

    let width = (b as f64).powi(d as i32);
    let s = flow.level_square_sums(tree);
    let mut worst = 0.0;
    let mut worst_level = None;
    for k in 1..s.len() {
        let r = s[k - 1] / (width * s[k]);
        if r > worst {
            worst = r;
            worst_level = Some(k);
        }
    }
    let square_sums_ok = worst <= 1.0 + SLACK;

    let gauge = Gauge::euclid(g, b, tree.height())?;
    let tree_energy = energy(tree, &gauge, flow)?.energy;
    let euclid_energy = euclid_energy(tree, labeling, flow, g)?;
    let ratio = euclid_energy / tree_energy;
    let lower = (b as f64).powi(-((d as u32 * diagonal_depth(b, d)) as i32));
    let upper = (3.0 * b as f64).powi(d as i32);
    let ratio_ok = ratio >= lower * (1.0 - SLACK) && ratio <= upper * (1.0 + SLACK);
    Ok(CubeEnergyReport {
        b,
        d,
        height: tree.height(),
        max_neighbors,
        neighbor_bound,
        neighbors_ok,
        worst_square_sum_ratio: worst,
        worst_square_sum_level: worst_level,
        square_sums_ok,
        tree_energy,
        euclid_energy,
        ratio,
        lower,
        upper,
        ratio_ok,
    })
}

/// One sampled Cantor tree truncated at one depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapRow {
    pub seed: u64,
    pub depth: usize,
    pub cap: f64,
    /// `Σ_{n <= depth} m^-n g(b^-n)`.
    pub partial_sum: f64,
    /// `1 / (C_U Σ h(n) m^-n)` from the limit-uniform flow.
    pub lower: f64,
    /// `A_Γ / Σ h(n) m^-n`.
    pub upper: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapCriterionReport {
    pub mean: f64,
    pub b: u32,
    pub d: usize,
    pub height: usize,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Whether the summands shrink geometrically at the bottom depth
    /// (ratio of the last two terms below one).
    pub sum_converges: bool,
    pub rows: Vec<CapRow>,
    /// Median sampled capacity per depth.
    pub median_cap: Vec<(usize, f64)>,
    pub all_ok: bool,
}

/// Capacities of sampled Cantor trees at increasing depth next to the
/// partial sums of `m^-n g(b^-n)`, each bracketed by the certificates
/// `1 / (C_U Σ h m^-n) <= Cap_f <= A_Γ / Σ h m^-n`.
pub fn cap_criterion(q: &OffspringLaw, g: &EuclidGauge, b: u32, d: usize, height: usize, seeds: &[u64]) -> Result<CapCriterionReport> {
    g.validate()?;
    let m = q.mean();
    if !(m > 1.0) {
        return Err(Error::InvalidLaw(format!("mean {m} is not supercritical")));
    }
    let terms: Vec<f64> = (0..=height).map(|n| m.powi(-(n as i32)) * g.eval((b as f64).powi(-(n as i32)))).collect();
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let sum_converges = height >= 1 && terms[height] < terms[height - 1];
    let means = geometric_means(m, height);
    let depths: Vec<usize> = (height.min(4)..=height).collect();

    let per_seed: Vec<Result<Vec<CapRow>>> = seeds
        .par_iter()
        .map(|&seed| {
            let (full, _) = cantor_sample(q, b, d, height, seed)?;
            depths
                .iter()
                .map(|&depth| {
                    let tree = full.truncate(depth);
                    let gauge = Gauge::euclid(g, b, depth)?;
                    let cap = capacity(&tree, &gauge)?;
                    let a = tree_stats(&tree, &means)?.growth_constant;
                    let c_u = flow_bound_stats(&tree, &Flow::uniform_leaf(&tree), &means)?.constant;
                    let weighted: f64 = gauge.increments().iter().zip(&means).map(|(h, mn)| h / mn).sum();
                    let lower = 1.0 / (c_u * weighted);
                    let upper = a / weighted;
                    let ok = cap.value >= lower * (1.0 - SLACK) && cap.value <= upper * (1.0 + SLACK);
                    Ok(CapRow { seed, depth, cap: cap.value, partial_sum: partial_sums[depth], lower, upper, ok })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_seed {
        rows.extend(r?);
    }
    let median_cap = depths
        .iter()
        .map(|&depth| {
            let caps: Vec<f64> = rows.iter().filter(|r| r.depth == depth).map(|r| r.cap).collect();
            (depth, median(caps))
        })
        .collect();
    let all_ok = rows.iter().all(|r| r.ok);
    Ok(CapCriterionReport { mean: m, b, d, height, terms, partial_sums, sum_converges, rows, median_cap, all_ok })
}

pub(crate) fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
