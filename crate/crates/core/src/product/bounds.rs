use serde::{Deserialize, Serialize};

use super::{cap_k, cap_k_options, ProductTree};
use crate::error::{Error, Result};
use crate::flow::{bounded_flow_bpve, bounded_flow_bpve_auto, flow_bound_stats, Flow, Gauge};
use crate::target::{target_exact, target_exact_rational, TargetTrie, EXACT_WORK_CAP};
use crate::tree::{dominating_child_counts, tree_stats, Environment, Tree, DEFAULT_VERTEX_CAP};

/// Relative slack for inequalities that can hold with equality.
const SLACK: f64 = 1e-12;

fn le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + SLACK) + f64::MIN_POSITIVE
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundFlags {
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `A_Γ = max_n |Γ_n| / M_n`.
    #[serde(rename = "A")]
    pub a: f64,
    /// `C_U = max_n M_n S_n(U)` for the limit-uniform flow.
    #[serde(rename = "C_U")]
    pub c_u: f64,
    pub cap_phi: f64,
    #[serde(rename = "cap_K")]
    pub cap_k: Option<f64>,
    #[serde(rename = "P_exact")]
    pub p_exact: f64,
    /// `Cap_φ / C_U`.
    pub lower: f64,
    /// `8 A_Γ Cap_φ`.
    pub upper: f64,
    pub bounds: BoundFlags,
}

impl RegularityReport {
    pub fn ok(&self) -> bool {
        self.bounds.lower_ok && self.bounds.upper_ok
    }
}

/// `Cap_φ(B) / C_U <= P(Γ; B) <= 8 A_Γ Cap_φ(B)` with the gauge φ built
/// from `means`. The kernel capacity is added when `with_cap_k` is set.
pub fn regularity_bounds(tree: &Tree, trie: &TargetTrie, means: &[f64], with_cap_k: bool) -> Result<RegularityReport> {
    let n = tree.height();
    if means.len() != n + 1 {
        return Err(Error::HeightMismatch(format!("{} means for height {n}", means.len())));
    }
    let a = tree_stats(tree, means)?.growth_constant;
    let c_u = flow_bound_stats(tree, &Flow::uniform_leaf(tree), means)?.constant;
    let phi = Gauge::phi(means, trie.alphabet())?;
    let cap_phi = trie.capacity(&phi)?;
    let p_exact = target_exact(tree, trie)?;
    let cap_k = if with_cap_k { Some(cap_k(&ProductTree::new(tree, trie)?, cap_k_options())?.value) } else { None };
    let lower = cap_phi / c_u;
    let upper = 8.0 * a * cap_phi;
    Ok(RegularityReport {
        a,
        c_u,
        cap_phi,
        cap_k,
        p_exact,
        lower,
        upper,
        bounds: BoundFlags { lower_ok: le(lower, p_exact), upper_ok: le(p_exact, upper) },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalReport {
    pub gamma_sizes: Vec<usize>,
    pub t_sizes: Vec<usize>,
    pub p_gamma: f64,
    pub p_t: f64,
    /// Whether the comparison was decided in rational arithmetic.
    pub exact: bool,
    pub ok: bool,
}

/// Compare `P(Γ; B)` with `P(T; B)` for the spherically symmetric tree `T`
/// whose level `n` is the least multiple of level `n - 1` that is at least
/// `A M_n`. By default `M` is Γ's own level profile and `A = 1`.
pub fn compare_spherical(tree: &Tree, trie: &TargetTrie, profile: Option<(&[f64], f64)>) -> Result<SphericalReport> {
    let own: Vec<f64>;
    let (means, scale) = match profile {
        Some(p) => p,
        None => {
            own = tree.level_sizes().iter().map(|&z| z as f64).collect();
            (own.as_slice(), 1.0)
        }
    };
    if means.len() != tree.height() + 1 {
        return Err(Error::HeightMismatch(format!("{} means for height {}", means.len(), tree.height())));
    }
    let counts = dominating_child_counts(means, scale, DEFAULT_VERTEX_CAP)?;
    let t = Tree::spherical(&counts)?;
    let gamma_sizes = tree.level_sizes();
    let t_sizes = t.level_sizes();
    if gamma_sizes.iter().zip(&t_sizes).any(|(g, t)| g > t) {
        return Err(Error::InvalidArgument("profile does not dominate the tree's level sizes".into()));
    }
    let p_gamma = target_exact(tree, trie)?;
    let p_t = target_exact(&t, trie)?;
    let small = (tree.len().max(t.len()) as u128) * trie.node_count() as u128 <= EXACT_WORK_CAP / 100;
    let (exact, ok) = if small {
        (true, target_exact_rational(tree, trie)? <= target_exact_rational(&t, trie)?)
    } else {
        (false, le(p_gamma, p_t))
    };
    Ok(SphericalReport { gamma_sizes, t_sizes, p_gamma, p_t, exact, ok })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiPhiReport {
    pub cap_psi: f64,
    pub cap_phi: f64,
    pub scale: f64,
    pub ok: bool,
}

/// `Cap_ψ(B) <= 2 A Cap_φ(B)`, where ψ is the φ-gauge of the dominating
/// spherically symmetric tree built from `(means, scale = A)`.
pub fn psi_phi_capacities(trie: &TargetTrie, means: &[f64], scale: f64) -> Result<PsiPhiReport> {
    let counts = dominating_child_counts(means, scale, DEFAULT_VERTEX_CAP)?;
    let mut sizes = vec![1.0];
    for &c in &counts {
        sizes.push(sizes.last().unwrap() * c as f64);
    }
    let cap_psi = trie.capacity(&Gauge::phi(&sizes, trie.alphabet())?)?;
    let cap_phi = trie.capacity(&Gauge::phi(means, trie.alphabet())?)?;
    Ok(PsiPhiReport { cap_psi, cap_phi, scale, ok: le(cap_psi, 2.0 * scale * cap_phi) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationRecord {
    pub p_gamma: f64,
    pub p_delta: f64,
    pub cap_phi: f64,
    /// `Cap_φ / C <= P(Γ; B)`.
    pub lower_ok: bool,
    /// `P(Δ; B) <= 8 A_Δ Cap_φ`.
    pub upper_ok: bool,
    /// `P(Γ; B) >= P(Δ; B) / (8 A_Δ C)`.
    pub ratio_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    /// Restriction level of the bounded flow.
    pub k: usize,
    /// `max_n M_n S_n` of the bounded flow on Γ.
    pub c: f64,
    pub a_delta: f64,
    /// `1 / (8 A_Δ C)`.
    pub certified: f64,
    /// Smallest `P(Γ; B) / P(Δ; B)` over targets with `P(Δ; B) > 0`.
    pub min_ratio: Option<f64>,
    pub records: Vec<DominationRecord>,
    pub ok: bool,
}

/// Certified comparison `P(Γ; B) >= P(Δ; B) / (8 A_Δ C)` between a tree Γ
/// grown in the environment and any tree Δ, with `C` taken from the
/// bounded-energy flow on Γ.
pub fn bpve_dominates(gamma: &Tree, delta: &Tree, env: &Environment, tries: &[TargetTrie], k: Option<usize>) -> Result<DominationReport> {
    let n = gamma.height();
    if delta.height() != n {
        return Err(Error::HeightMismatch(format!("Γ has height {n}, Δ has height {}", delta.height())));
    }
    let bounded = match k {
        Some(k) => bounded_flow_bpve(gamma, env, k)?,
        None => bounded_flow_bpve_auto(gamma, env)?,
    };
    let means = &env.cumulative_means()[..=n];
    let c = flow_bound_stats(gamma, &bounded.flow, means)?.constant;
    let a_delta = tree_stats(delta, means)?.growth_constant;
    let certified = 1.0 / (8.0 * a_delta * c);
    let mut records = Vec::with_capacity(tries.len());
    let mut min_ratio: Option<f64> = None;
    for trie in tries {
        let phi = Gauge::phi(means, trie.alphabet())?;
        let cap_phi = trie.capacity(&phi)?;
        let p_gamma = target_exact(gamma, trie)?;
        let p_delta = target_exact(delta, trie)?;
        if p_delta > 0.0 {
            let r = p_gamma / p_delta;
            min_ratio = Some(min_ratio.map_or(r, |m: f64| m.min(r)));
        }
        records.push(DominationRecord {
            p_gamma,
            p_delta,
            cap_phi,
            lower_ok: le(cap_phi / c, p_gamma),
            upper_ok: le(p_delta, 8.0 * a_delta * cap_phi),
            ratio_ok: le(p_delta * certified, p_gamma),
        });
    }
    let ok = records.iter().all(|r| r.lower_ok && r.upper_ok && r.ratio_ok);
    Ok(DominationReport { k: bounded.k, c, a_delta, certified, min_ratio, records, ok })
}
