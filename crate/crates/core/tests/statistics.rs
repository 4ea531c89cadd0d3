//! Sampling checks against known means and distributions.

use treepolar::euclid::cantor_sample;
use treepolar::rng::derive_seed;
use treepolar::target::{survival_exact, survival_mc};
use treepolar::{Environment, OffspringLaw, Tree};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn normalized_generation_size_has_mean_one() {
    let law = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
    let w: Vec<f64> = (0..10_000)
        .map(|i| Tree::sample_gw(&law, 10, derive_seed(1, "martingale", i)).unwrap().level_size(10) as f64 / 1024.0)
        .collect();
    let (m, se) = mean_and_se(&w);
    assert!((m - 1.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn cantor_generation_sizes_grow_like_the_mean() {
    let law = OffspringLaw::from_pairs(&[(1, 0.5), (2, 0.5)]).unwrap();
    let n = 8;
    let z: Vec<Vec<f64>> = (0..10_000)
        .map(|i| {
            let (t, _) = cantor_sample(&law, 2, 1, n, derive_seed(2, "cantor", i)).unwrap();
            t.level_sizes().iter().map(|&s| s as f64).collect()
        })
        .collect();
    for k in [2, 5, 8] {
        let col: Vec<f64> = z.iter().map(|s| s[k]).collect();
        let (m, se) = mean_and_se(&col);
        let expected = 1.5f64.powi(k as i32);
        assert!((m - expected).abs() <= 3.0 * se, "level {k}: mean {m}, expected {expected}, se {se}");
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn constant_environment_matches_galton_watson() {
    let law = OffspringLaw::from_pairs(&[(1, 0.3), (2, 0.4), (3, 0.3)]).unwrap();
    let env = Environment::constant(law.clone(), 6);
    let n = 3000;
    let gw: Vec<f64> = (0..n).map(|i| Tree::sample_gw(&law, 6, derive_seed(3, "gw", i)).unwrap().level_size(6) as f64).collect();
    let bp: Vec<f64> =
        (0..n).map(|i| Tree::sample_bpve(&env, 6, derive_seed(3, "bpve", i)).unwrap().level_size(6) as f64).collect();
    let d = ks(gw, bp);
    // critical value at level 0.001
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS statistic {d} exceeds {crit}");
}

#[test]
fn alternating_environment_means() {
    let a = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
    let b = OffspringLaw::from_pairs(&[(2, 0.5), (4, 0.5)]).unwrap();
    let env = Environment::alternating(a, b, 6);
    assert_eq!(env.cumulative_means(), &[1.0, 2.0, 6.0, 12.0, 36.0, 72.0, 216.0]);
    let z: Vec<f64> =
        (0..5000).map(|i| Tree::sample_bpve(&env, 6, derive_seed(4, "env", i)).unwrap().level_size(6) as f64 / 216.0).collect();
    let (m, se) = mean_and_se(&z);
    assert!((m - 1.0).abs() <= 3.0 * se, "mean {m} se {se}");
}

#[test]
fn monte_carlo_survival_is_unbiased() {
    let law = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)]).unwrap();
    for seed in 0..5 {
        let tree = Tree::sample_gw(&law, 6, seed).unwrap();
        let p = [0.6, 0.7, 0.5, 0.8, 0.6, 0.9];
        let exact = survival_exact(&tree, &p).unwrap();
        let mc = survival_mc(&tree, &p, 100_000, seed).unwrap();
        assert!(mc.z_score(exact) <= 4.0, "seed {seed}: exact {exact}, mc {} ± {}", mc.p, mc.stderr);
    }
}
