//! Library results against independent brute-force oracles.

use treepolar::flow::{capacity, capacity_frank_wolfe, energy, FwOptions};
use treepolar::product::{kernel_energy, kernel_energy_factored, ProductFlow, ProductTree};
use treepolar::rng::{self, derive_seed};
use treepolar::target::{survival_exact, target_exact, target_exact_rational, TargetTrie};
use treepolar::{Flow, Gauge, OffspringLaw, Tree};

use num_traits::ToPrimitive;
use rand::Rng;

fn law() -> OffspringLaw {
    OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap()
}

fn wide_law() -> OffspringLaw {
    OffspringLaw::from_pairs(&[(1, 0.4), (2, 0.3), (4, 0.3)]).unwrap()
}

/// Path from the root to `v`, root first.
fn path_to(tree: &Tree, mut v: usize) -> Vec<usize> {
    let mut out = vec![v];
    while let Some(p) = tree.parent(v) {
        out.push(p);
        v = p;
    }
    out.reverse();
    out
}

fn random_gauge(height: usize, seed: u64) -> Gauge {
    let mut r = rng::rng(seed);
    Gauge::from_increments((0..=height).map(|_| r.gen_range(0.1..3.0)).collect()).unwrap()
}

#[test]
fn energy_matches_double_sum() {
    let mut checked = 0;
    for seed in 0..200 {
        let height = 1 + seed as usize % 7;
        let tree = Tree::sample_gw(&wide_law(), height, seed).unwrap();
        let leaves: Vec<usize> = tree.leaves().collect();
        if leaves.is_empty() || leaves.len() > 200 {
            continue;
        }
        let gauge = random_gauge(height, seed + 1000);
        let values = gauge.values();
        let flow = Flow::random_leaf(&tree, seed);
        let paths: Vec<Vec<usize>> = leaves.iter().map(|&v| path_to(&tree, v)).collect();
        let w = flow.leaf_weights(&tree);
        let mut direct = 0.0;
        for (i, pi) in paths.iter().enumerate() {
            for (j, pj) in paths.iter().enumerate() {
                let meet = pi.iter().zip(pj).take_while(|(a, b)| a == b).count() - 1;
                direct += values[meet] * w[i] * w[j];
            }
        }
        let e = energy(&tree, &gauge, &flow).unwrap().energy;
        assert!((e - direct).abs() <= 1e-12 * direct, "seed {seed}: {e} vs {direct}");
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn random_flows_never_beat_the_optimum() {
    for seed in 0..40 {
        let tree = Tree::sample_gw(&law(), 5, seed).unwrap();
        let gauge = random_gauge(5, seed);
        let cap = capacity(&tree, &gauge).unwrap();
        let best = energy(&tree, &gauge, &cap.flow).unwrap().energy;
        assert!((best - cap.min_energy).abs() <= 1e-12 * best);
        assert!((best * cap.value - 1.0).abs() < 1e-12);
        for k in 0..20 {
            let e = energy(&tree, &gauge, &Flow::random_leaf(&tree, derive_seed(seed, "flow", k))).unwrap().energy;
            assert!(e >= best * (1.0 - 1e-12));
        }
    }
}

#[test]
fn frank_wolfe_agrees_with_recursion() {
    let mut done = 0;
    let mut seed = 0;
    while done < 50 {
        seed += 1;
        let tree = Tree::sample_gw(&wide_law(), 4, seed).unwrap();
        let leaves = tree.level_size(4);
        if leaves == 0 || leaves > 15 {
            continue;
        }
        let gauge = random_gauge(4, seed);
        let exact = capacity(&tree, &gauge).unwrap().value;
        let opts = FwOptions { tolerance: 1e-10, max_iterations: 200_000 };
        let (fw, sol) = capacity_frank_wolfe(&tree, &gauge, opts).unwrap();
        assert!(sol.converged);
        assert!((fw - exact).abs() <= 1e-6 * exact, "seed {seed}: {fw} vs {exact}");
        done += 1;
    }
}

/// Enumerate every open/closed assignment of the edges.
fn brute_survival(tree: &Tree, p: &[f64]) -> f64 {
    let n = tree.height();
    let edges: Vec<usize> = (1..tree.len()).collect();
    assert!(edges.len() <= 20);
    let mut total = 0.0;
    for mask in 0u32..1 << edges.len() {
        let open = |v: usize| mask >> (v - 1) & 1 == 1;
        let weight: f64 =
            edges.iter().map(|&v| if open(v) { p[tree.depth(v) - 1] } else { 1.0 - p[tree.depth(v) - 1] }).product();
        let reaches = tree.level(n).any(|leaf| path_to(tree, leaf)[1..].iter().all(|&v| open(v)));
        if reaches {
            total += weight;
        }
    }
    total
}

#[test]
fn survival_matches_edge_enumeration() {
    let mut done = 0;
    for seed in 0..200 {
        let height = 1 + seed as usize % 4;
        let tree = Tree::sample_gw(&wide_law(), height, seed).unwrap();
        if tree.len() - 1 > 16 {
            continue;
        }
        let mut r = rng::rng(seed);
        let p: Vec<f64> = (0..height).map(|_| r.gen_range(0.05..1.0)).collect();
        let exact = survival_exact(&tree, &p).unwrap();
        let brute = brute_survival(&tree, &p);
        assert!((exact - brute).abs() < 1e-12, "seed {seed}: {exact} vs {brute}");
        done += 1;
    }
    assert!(done >= 100);
}

/// Enumerate every labeling of the edges by letters of the alphabet.
fn brute_target(tree: &Tree, trie: &TargetTrie) -> f64 {
    let b = trie.alphabet() as u64;
    let edges = tree.len() - 1;
    let count = b.pow(edges as u32);
    assert!(count <= 1 << 20);
    let leaves: Vec<Vec<usize>> = tree.level(tree.height()).map(|v| path_to(tree, v)).collect();
    let mut hits = 0u64;
    let mut letters = vec![0u32; tree.len()];
    for code in 0..count {
        let mut c = code;
        for l in letters.iter_mut().skip(1) {
            *l = (c % b) as u32;
            c /= b;
        }
        let hit = leaves.iter().any(|p| {
            let word: Vec<u32> = p[1..].iter().map(|&v| letters[v]).collect();
            trie.contains(&word)
        });
        hits += u64::from(hit);
    }
    hits as f64 / count as f64
}

#[test]
fn target_matches_labeling_enumeration() {
    let mut done = 0;
    for seed in 0..300 {
        let height = 1 + seed as usize % 3;
        let b = 2 + (seed % 2) as u32;
        let tree = Tree::sample_gw(&wide_law(), height, seed).unwrap();
        if (b as u64).checked_pow((tree.len() - 1) as u32).is_none_or(|n| n > 1 << 18) {
            continue;
        }
        let trie = TargetTrie::random(b, height, 0.4, seed + 7).unwrap();
        let exact = target_exact(&tree, &trie).unwrap();
        let rational = target_exact_rational(&tree, &trie).unwrap();
        let brute = brute_target(&tree, &trie);
        assert!((exact - brute).abs() < 1e-12, "seed {seed}: {exact} vs {brute}");
        assert!((rational.to_f64().unwrap() - brute).abs() < 1e-12);
        done += 1;
    }
    assert!(done >= 50, "{done}");
}

#[test]
fn product_targets_are_percolation() {
    for seed in 0..100 {
        let height = 1 + seed as usize % 6;
        let tree = Tree::sample_gw(&law(), height, seed).unwrap();
        let b = 4;
        let mut r = rng::rng(seed);
        let counts: Vec<u32> = (0..height).map(|_| r.gen_range(1..=b)).collect();
        let sets: Vec<Vec<u32>> = counts.iter().map(|&c| (0..c).collect()).collect();
        let trie = TargetTrie::product(b, &sets).unwrap();
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / b as f64).collect();
        let a = target_exact(&tree, &trie).unwrap();
        let s = survival_exact(&tree, &p).unwrap();
        assert!((a - s).abs() < 1e-12, "seed {seed}: {a} vs {s}");
    }
}

#[test]
fn target_probability_is_monotone() {
    for seed in 0..30 {
        let tree = Tree::sample_gw(&law(), 4, seed).unwrap();
        let mut words: Vec<Vec<u32>> = Vec::new();
        let mut last = 0.0;
        let mut r = rng::rng(seed);
        for _ in 0..12 {
            words.push((0..4).map(|_| r.gen_range(0..2)).collect());
            let p = target_exact(&tree, &TargetTrie::from_words(2, 4, &words).unwrap()).unwrap();
            assert!(p >= last - 1e-15);
            last = p;
        }
        // every tree of this law embeds in the ternary tree
        let bigger = Tree::regular(3, 4).unwrap();
        let trie = TargetTrie::from_words(2, 4, &words).unwrap();
        assert!(target_exact(&bigger, &trie).unwrap() >= target_exact(&tree, &trie).unwrap() - 1e-15);
    }
}

/// Least multiple of `prev` that is at least `num / den`, in integers.
fn least_multiple(prev: u128, num: u128, den: u128) -> u128 {
    let k = num.div_ceil(den * prev).max(1);
    k * prev
}

#[test]
fn dominating_tree_matches_integer_oracle() {
    // M_n = 2.5^n = 5^n / 2^n
    let means: Vec<f64> = (0..=6).map(|n| 2.5f64.powi(n)).collect();
    let t = Tree::dominating_spherical(&means, 1.0).unwrap();
    let mut expected = vec![1u128];
    for n in 1..=6u32 {
        let prev = *expected.last().unwrap();
        expected.push(least_multiple(prev, 5u128.pow(n), 2u128.pow(n)));
    }
    let sizes: Vec<u128> = t.level_sizes().iter().map(|&s| s as u128).collect();
    assert_eq!(sizes, expected);
    assert_eq!(sizes[2], 9);

    // M_n = 3^n / 2^n with A = 2
    let means: Vec<f64> = (0..=7).map(|n| 1.5f64.powi(n)).collect();
    let t = Tree::dominating_spherical(&means, 2.0).unwrap();
    let mut expected = vec![1u128];
    for n in 1..=7u32 {
        let prev = *expected.last().unwrap();
        expected.push(least_multiple(prev, 2 * 3u128.pow(n), 2u128.pow(n)));
    }
    assert_eq!(t.level_sizes().iter().map(|&s| s as u128).collect::<Vec<_>>(), expected);
}

#[test]
fn rank_one_energy_matches_dense() {
    for seed in 0..50 {
        let height = 2 + seed as usize % 3;
        let tree = Tree::sample_gw(&law(), height, seed).unwrap();
        let trie = TargetTrie::random(2, height, 0.6, seed + 3).unwrap();
        if trie.is_empty() {
            continue;
        }
        let pt = ProductTree::new(&tree, &trie).unwrap();
        let u = Flow::random_leaf(&tree, seed);
        let mut r = rng::rng(seed + 5);
        let mut theta: Vec<f64> = (0..pt.words().len()).map(|_| r.gen_range(0.01..1.0)).collect();
        let s: f64 = theta.iter().sum();
        theta.iter_mut().for_each(|t| *t /= s);
        let rank1 = ProductFlow::Rank1 { u: u.clone(), theta: theta.clone() };
        let dense = rank1.to_dense(&pt).unwrap();
        let e1 = kernel_energy(&pt, &rank1).unwrap();
        let e2 = kernel_energy(&pt, &ProductFlow::Dense(dense.clone())).unwrap();
        let e3 = kernel_energy_factored(&pt, &u, &theta).unwrap();
        let n = dense.len();
        let mut direct = 0.0;
        for a in 0..n {
            for c in 0..n {
                direct += pt.kernel(a, c) * dense[a] * dense[c];
            }
        }
        for e in [e1, e2, e3] {
            assert!((e - direct).abs() <= 1e-10 * direct, "seed {seed}: {e} vs {direct}");
        }
    }
}
