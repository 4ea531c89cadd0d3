use rand::Rng as _;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{num, ExperimentConfig, Table};
use crate::error::{Error, Result};
use crate::euclid::{cantor_sample, cap_criterion, cube_energy_check, CubeLabeling};
use crate::flow::{capacity, Flow, Gauge};
use crate::product::{
    bpve_dominates, cap_k, cap_k_options, compare_spherical, psi_phi_capacities, regularity_bounds, ProductTree,
};
use crate::rng::{self, derive_seed};
use crate::target::{
    discretize_target, survival_exact, target_exact, target_mc, BoxUnion, LabelLaw, TargetPredicate, TargetTrie,
};
use crate::tree::{geometric_means, Environment, LawSpec, OffspringLaw, Tree};

use super::Experiment;

/// Absolute slack of the kernel sandwich, covering the solver tolerance.
const SANDWICH_TOL: f64 = 1e-5;
/// Slack on the two-sided percolation comparison.
const LYONS_TOL: f64 = 1e-9;

pub(super) fn dispatch(cfg: &ExperimentConfig) -> Result<Table> {
    match cfg.experiment {
        Experiment::LyonsCheck => lyons_check(cfg),
        Experiment::SandwichCapK => sandwich(cfg),
        Experiment::Regularity => regularity(cfg),
        Experiment::Equipolar => equipolar(cfg),
        Experiment::CompareSpherical => spherical(cfg),
        Experiment::BpveDominate => bpve(cfg),
        Experiment::VarianceBlowup => variance_blowup(cfg),
        Experiment::CantorCap => cantor_cap(cfg),
        Experiment::CubeEnergy => cube_energy(cfg),
        Experiment::TargetMc => discretization(cfg),
    }
}

fn instance_seed(cfg: &ExperimentConfig, i: usize) -> u64 {
    derive_seed(cfg.seed, cfg.experiment.name(), i as u64)
}

fn instances(cfg: &ExperimentConfig) -> usize {
    cfg.instances.expect("resolved")
}

fn depth_of(cfg: &ExperimentConfig, i: usize) -> usize {
    let (lo, hi) = (cfg.min_depth.expect("resolved"), cfg.depth.expect("resolved"));
    if lo >= hi {
        hi
    } else {
        lo + i % (hi - lo + 1)
    }
}

fn law(spec: &Option<LawSpec>) -> Result<OffspringLaw> {
    spec.as_ref().ok_or_else(|| Error::InvalidArgument("missing offspring law".into()))?.build()
}

/// Evaluate instances in parallel, keeping instance order.
fn par_instances<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

/// Random target whose word density is uniform on `(0, min(1, 2 density)]`.
fn random_trie(b: u32, depth: usize, density: f64, seed: u64) -> Result<TargetTrie> {
    let mut r = rng::rng(derive_seed(seed, "density", 0));
    let top = (2.0 * density).min(1.0);
    let d = top * (1.0 - r.gen::<f64>());
    TargetTrie::random(b, depth, d, derive_seed(seed, "words", 0))
}

fn median(mut xs: Vec<f64>) -> f64 {
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

fn sizes(v: &[usize]) -> Value {
    Value::String(v.iter().map(|z| z.to_string()).collect::<Vec<_>>().join(" "))
}

fn lyons_check(cfg: &ExperimentConfig) -> Result<Table> {
    let q = law(&cfg.law)?;
    let [lo, hi] = cfg.retention.expect("resolved");
    if !(0.0 < lo && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!("retention range [{lo}, {hi}] must lie in (0, 1]")));
    }
    let out = par_instances(instances(cfg), |i| {
        let seed = instance_seed(cfg, i);
        let depth = depth_of(cfg, i);
        let tree = Tree::sample_gw_with_cap(&q, depth, seed, cfg.caps.max_vertices)?;
        let mut r = rng::rng(derive_seed(seed, "retention", 0));
        let p: Vec<f64> = (0..depth).map(|_| if lo == hi { lo } else { r.gen_range(lo..=hi) }).collect();
        let prob = survival_exact(&tree, &p)?;
        let cap = capacity(&tree, &Gauge::percolation(&p)?)?.value;
        Ok((seed, depth, tree.level_size(depth), prob, cap))
    })?;
    let mut t = Table::new(&["instance", "seed", "depth", "leaves", "P", "cap", "ratio", "pass"]);
    let mut worst: f64 = 0.0;
    let mut ordered = 0;
    for (i, &(seed, depth, leaves, p, cap)) in out.iter().enumerate() {
        let ratio = (p / cap).max(cap / p);
        worst = worst.max(ratio);
        if cap <= p && p <= 2.0 * cap {
            ordered += 1;
        }
        t.row(vec![json!(i), json!(seed), json!(depth), json!(leaves), num(p), num(cap), num(ratio), json!(ratio <= 2.0 + LYONS_TOL)]);
    }
    t.aggregate("max_ratio", num(worst));
    t.aggregate("cap_le_p_le_2cap", json!(ordered));
    t.check(
        "percolation-capacity-comparison",
        worst <= 2.0 + LYONS_TOL,
        format!("max(P/Cap, Cap/P) <= 2 on {} instances; worst {worst}", out.len()),
    );
    Ok(t)
}

fn sandwich(cfg: &ExperimentConfig) -> Result<Table> {
    let q = law(&cfg.law)?;
    let b = cfg.alphabet.expect("resolved");
    let density = cfg.density.expect("resolved");
    let out = par_instances(instances(cfg), |i| {
        let seed = instance_seed(cfg, i);
        let depth = depth_of(cfg, i);
        let tree = Tree::sample_gw_with_cap(&q, depth, seed, cfg.caps.max_vertices)?;
        let trie = random_trie(b, depth, density, derive_seed(seed, "target", 0))?;
        let pt = ProductTree::with_cap(&tree, &trie, cfg.caps.max_product_pairs)?;
        let cap = cap_k(&pt, cap_k_options())?;
        let p = target_exact(&tree, &trie)?;
        Ok((seed, depth, trie.word_count(), p, cap))
    })?;
    let mut t = Table::new(&[
        "instance", "seed", "depth", "words", "P", "cap_K", "cap_K_upper", "iterations", "converged", "lower_ok", "upper_ok",
    ]);
    let (mut lower_fail, mut upper_fail, mut unconverged) = (0, 0, 0);
    let mut worst_ratio: f64 = 0.0;
    for (i, (seed, depth, words, p, cap)) in out.iter().enumerate() {
        let lower_ok = cap.value - SANDWICH_TOL <= *p;
        let upper_ok = *p <= 4.0 * cap.value + SANDWICH_TOL;
        lower_fail += usize::from(!lower_ok);
        upper_fail += usize::from(!upper_ok);
        unconverged += usize::from(!cap.converged);
        if cap.value > 0.0 {
            worst_ratio = worst_ratio.max(p / cap.value);
        }
        t.row(vec![
            json!(i),
            json!(seed),
            json!(depth),
            json!(*words as u64),
            num(*p),
            num(cap.value),
            num(cap.upper_bound()),
            json!(cap.iterations),
            json!(cap.converged),
            json!(lower_ok),
            json!(upper_ok),
        ]);
    }
    t.aggregate("max_P_over_cap_K", num(worst_ratio));
    t.aggregate("unconverged", json!(unconverged));
    t.check("kernel-sandwich-lower", lower_fail == 0, format!("cap_K - {SANDWICH_TOL} <= P failed {lower_fail} times"));
    t.check("kernel-sandwich-upper", upper_fail == 0, format!("P <= 4 cap_K + {SANDWICH_TOL} failed {upper_fail} times"));
    Ok(t)
}

fn regularity(cfg: &ExperimentConfig) -> Result<Table> {
    let q = law(&cfg.law)?;
    let b = cfg.alphabet.expect("resolved");
    let tries = cfg.tries.expect("resolved");
    let density = cfg.density.expect("resolved");
    let out = par_instances(instances(cfg), |i| {
        let seed = instance_seed(cfg, i);
        let depth = depth_of(cfg, i);
        let means = geometric_means(q.mean(), depth);
        let tree = Tree::sample_gw_with_cap(&q, depth, seed, cfg.caps.max_vertices)?;
        (0..tries)
            .map(|j| {
                let trie = random_trie(b, depth, density, derive_seed(seed, "target", j as u64))?;
                let r = regularity_bounds(&tree, &trie, &means, false)?;
                let psi = psi_phi_capacities(&trie, &means, r.a)?;
                Ok((seed, r, psi.ok))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut t = Table::new(&[
        "instance", "target", "seed", "A", "C_U", "cap_phi", "P", "lower", "upper", "lower_ok", "upper_ok", "psi_ok",
    ]);
    let (mut lower_fail, mut upper_fail, mut psi_fail) = (0, 0, 0);
    for (i, rows) in out.iter().enumerate() {
        for (j, (seed, r, psi_ok)) in rows.iter().enumerate() {
            lower_fail += usize::from(!r.bounds.lower_ok);
            upper_fail += usize::from(!r.bounds.upper_ok);
            psi_fail += usize::from(!psi_ok);
            t.row(vec![
                json!(i),
                json!(j),
                json!(seed),
                num(r.a),
                num(r.c_u),
                num(r.cap_phi),
                num(r.p_exact),
                num(r.lower),
                num(r.upper),
                json!(r.bounds.lower_ok),
                json!(r.bounds.upper_ok),
                json!(psi_ok),
            ]);
        }
    }
    t.check("regularity-lower", lower_fail == 0, format!("Cap_phi / C_U <= P failed {lower_fail} times"));
    t.check("regularity-upper", upper_fail == 0, format!("P <= 8 A Cap_phi failed {upper_fail} times"));
    t.check("psi-phi-capacity", psi_fail == 0, format!("Cap_psi <= 2 A Cap_phi failed {psi_fail} times"));
    Ok(t)
}

fn equipolar(cfg: &ExperimentConfig) -> Result<Table> {
    let q = law(&cfg.law)?;
    let q_alt = law(&cfg.law_alt)?;
    let levels = cfg.retention_levels.clone().expect("resolved");
    if levels.is_empty() || levels.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(Error::InvalidArgument("retention levels must lie in (0, 1]".into()));
    }
    let tries = cfg.tries.expect("resolved");
    let depth = cfg.depth.expect("resolved");
    let same = cfg.same_seeds.expect("resolved");
    let mut r = rng::rng(derive_seed(cfg.seed, "equipolar-targets", 0));
    let targets: Vec<Vec<f64>> =
        (0..tries).map(|_| (0..depth).map(|_| levels[r.gen_range(0..levels.len())]).collect()).collect();
    let out = par_instances(instances(cfg), |i| {
        let seed_a = derive_seed(cfg.seed, "equipolar-first", i as u64);
        let seed_b = if same { seed_a } else { derive_seed(cfg.seed, "equipolar-second", i as u64) };
        let a = Tree::sample_gw_with_cap(&q, depth, seed_a, cfg.caps.max_vertices)?;
        let b = Tree::sample_gw_with_cap(&q_alt, depth, seed_b, cfg.caps.max_vertices)?;
        let ratios = targets
            .iter()
            .map(|p| Ok(survival_exact(&a, p)? / survival_exact(&b, p)?))
            .collect::<Result<Vec<f64>>>()?;
        Ok((seed_a, seed_b, ratios))
    })?;
    let mut t = Table::new(&["pair", "seed_first", "seed_second", "min_ratio", "median_ratio", "max_ratio", "finite_positive"]);
    let mut all = Vec::new();
    let mut bad = 0;
    for (i, (sa, sb, ratios)) in out.iter().enumerate() {
        let ok = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
        bad += usize::from(!ok);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        t.row(vec![json!(i), json!(sa), json!(sb), num(lo), num(median(ratios.clone())), num(hi), json!(ok)]);
        all.extend_from_slice(ratios);
    }
    let med = median(all);
    t.aggregate("median_ratio", num(med));
    t.check("ratios-finite-positive", bad == 0, format!("{bad} pairs with a zero or infinite ratio"));
    t.engineering_check(
        "median-ratio-window",
        (1.0 / 3.0..=3.0).contains(&med),
        format!("median ratio {med} within [1/3, 3] (engineering threshold)"),
    );
    Ok(t)
}

fn spherical(cfg: &ExperimentConfig) -> Result<Table> {
    let q = law(&cfg.law)?;
    let b = cfg.alphabet.expect("resolved");
    let out = par_instances(instances(cfg), |i| {
        let seed = instance_seed(cfg, i);
        let depth = depth_of(cfg, i);
        let tree = Tree::sample_gw_with_cap(&q, depth, seed, cfg.caps.max_vertices)?;
        let words = crate::target::word_space(b, depth)?;
        let tries: Vec<TargetTrie> = if words <= 12 {
            (0..1u128 << words).map(|mask| TargetTrie::from_mask(b, depth, mask)).collect::<Result<_>>()?
        } else {
            let n = cfg.tries.unwrap_or(100);
            (0..n).map(|j| random_trie(b, depth, 0.5, derive_seed(seed, "target", j as u64))).collect::<Result<_>>()?
        };
        let mut violations = 0;
        let mut exact = true;
        let mut t_sizes = Vec::new();
        for trie in &tries {
            let r = compare_spherical(&tree, trie, None)?;
            violations += usize::from(!r.ok);
            exact &= r.exact;
            t_sizes = r.t_sizes;
        }
        Ok((seed, tree.level_sizes(), t_sizes, tries.len(), violations, exact))
    })?;
    let mut t = Table::new(&["instance", "seed", "sizes", "dominating_sizes", "targets", "violations", "exact"]);
    let mut total = 0;
    let mut checked = 0;
    for (i, (seed, gs, ts, n, v, exact)) in out.iter().enumerate() {
        total += v;
        checked += n;
        t.row(vec![json!(i), json!(seed), sizes(gs), sizes(ts), json!(n), json!(v), json!(exact)]);
    }
    t.check("spherical-domination", total == 0, format!("P(Γ;B) <= P(T;B) failed {total} of {checked} times"));
    Ok(t)
}

fn bpve(cfg: &ExperimentConfig) -> Result<Table> {
    let depth = cfg.depth.expect("resolved");
    let env = Environment::alternating(law(&cfg.law)?, law(&cfg.law_alt)?, depth);
    let b = cfg.alphabet.expect("resolved");
    let tries = cfg.tries.expect("resolved");
    let density = cfg.density.expect("resolved");
    let means = env.cumulative_means()[..=depth].to_vec();
    let delta = Tree::dominating_spherical_with_cap(&means, 1.0, cfg.caps.max_vertices)?;
    let out = par_instances(instances(cfg), |i| {
        let seed = instance_seed(cfg, i);
        let gamma = Tree::sample_bpve_with_cap(&env, depth, seed, cfg.caps.max_vertices)?;
        let targets = (0..tries)
            .map(|j| random_trie(b, depth, density, derive_seed(seed, "target", j as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok((seed, bpve_dominates(&gamma, &delta, &env, &targets, None)?))
    })?;
    let mut t = Table::new(&["instance", "seed", "k", "C", "A_delta", "certified", "min_ratio", "ok"]);
    let mut failures = 0;
    let mut min_ratio = f64::INFINITY;
    let mut min_certified = f64::INFINITY;
    for (i, (seed, r)) in out.iter().enumerate() {
        failures += r.records.iter().filter(|x| !(x.lower_ok && x.upper_ok && x.ratio_ok)).count();
        if let Some(m) = r.min_ratio {
            min_ratio = min_ratio.min(m);
        }
        min_certified = min_certified.min(r.certified);
        t.row(vec![
            json!(i),
            json!(seed),
            json!(r.k),
            num(r.c),
            num(r.a_delta),
            num(r.certified),
            r.min_ratio.map_or(Value::Null, num),
            json!(r.ok),
        ]);
    }
    t.aggregate("empirical_min_ratio", num(min_ratio));
    t.aggregate("certified_min", num(min_certified));
    t.aggregate("dominating_sizes", sizes(&delta.level_sizes()));
    t.check(
        "bpve-certified-domination",
        failures == 0,
        format!("P(Γ;B) >= P(Δ;B) / (8 A_Δ C) and its two halves failed {failures} times"),
    );
    Ok(t)
}

/// `C(N') = max_{n <= N'} M_n S_n(U_{N'})` for `N'` in the window, where
/// `U_{N'}` is the limit-uniform flow of the tree cut at height `N'`.
pub(crate) fn c_profile(tree: &Tree, m: f64, window: [usize; 2]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut below = vec![0u64; tree.len()];
    for cut in window[0]..=window[1] {
        for v in tree.level(cut) {
            below[v] = 1;
        }
        for v in (0..tree.level(cut).start).rev() {
            below[v] = tree.children(v).map(|c| below[c]).sum();
        }
        let total = below[0] as f64;
        let mut best: f64 = 0.0;
        let mut mn = 1.0;
        for n in 0..=cut {
            let s: f64 = tree.level(n).map(|v| (below[v] as f64 / total).powi(2)).sum();
            best = best.max(mn * s);
            mn *= m;
        }
        out.push(best);
    }
    out
}

/// Least-squares slope of `ln y` against `x`.
fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn variance_blowup(cfg: &ExperimentConfig) -> Result<Table> {
    let laws = [("finite", law(&cfg.law)?), ("heavy", law(&cfg.law_alt)?)];
    let window = cfg.window.expect("resolved");
    let depth = cfg.depth.expect("resolved");
    if window[0] >= window[1] || window[1] > depth {
        return Err(Error::InvalidArgument(format!("window {window:?} must be increasing and within the depth {depth}")));
    }
    let n = instances(cfg);
    let xs: Vec<f64> = (window[0]..=window[1]).map(|k| k as f64).collect();
    let mut columns: Vec<String> = ["law", "instance", "seed", "log_slope"].iter().map(|s| s.to_string()).collect();
    columns.extend((window[0]..=window[1]).map(|k| format!("C_{k}")));
    let mut t = Table::with_columns(columns);
    let mut medians = serde_json::Map::new();
    let mut finite_slope = f64::NAN;
    let mut heavy_profile = Vec::new();
    for (name, q) in &laws {
        let out = par_instances(n, |i| {
            let seed = derive_seed(cfg.seed, name, i as u64);
            let tree = Tree::sample_gw_with_cap(q, depth, seed, cfg.caps.max_vertices)?;
            Ok((seed, c_profile(&tree, q.mean(), window)))
        })?;
        let mut slopes = Vec::with_capacity(n);
        for (i, (seed, profile)) in out.iter().enumerate() {
            let slope = log_slope(&xs, profile);
            slopes.push(slope);
            let mut row = vec![json!(name), json!(i), json!(seed), num(slope)];
            row.extend(profile.iter().map(|&c| num(c)));
            t.row(row);
        }
        let median_profile: Vec<f64> =
            (0..xs.len()).map(|k| median(out.iter().map(|(_, p)| p[k]).collect())).collect();
        let med_slope = median(slopes);
        medians.insert(
            name.to_string(),
            json!({ "median_log_slope": num(med_slope), "median_profile": median_profile.iter().map(|&c| num(c)).collect::<Vec<_>>() }),
        );
        if *name == "finite" {
            finite_slope = med_slope;
        } else {
            heavy_profile = median_profile;
        }
    }
    t.aggregate("profiles", Value::Object(medians));
    t.engineering_check(
        "finite-variance-profile-flat",
        finite_slope <= 0.05,
        format!("median log-slope {finite_slope} <= 0.05 (engineering threshold)"),
    );
    let increasing = heavy_profile.windows(2).all(|w| w[1] > w[0]);
    t.engineering_check(
        "heavy-tail-profile-increasing",
        increasing,
        format!("median profile strictly increasing over {window:?} (engineering criterion)"),
    );
    Ok(t)
}

fn cantor_cap(cfg: &ExperimentConfig) -> Result<Table> {
    let q = law(&cfg.law)?;
    let b = cfg.alphabet.expect("resolved");
    let g = cfg.gauge.expect("resolved");
    let depth = cfg.depth.expect("resolved");
    let seeds: Vec<u64> = (0..instances(cfg)).map(|i| instance_seed(cfg, i)).collect();
    let mut t = Table::new(&["d", "seed", "depth", "cap", "partial_sum", "lower", "upper", "ok"]);
    let mut failures = 0;
    let mut summary = serde_json::Map::new();
    for &d in cfg.dims.as_ref().expect("resolved") {
        let r = cap_criterion(&q, &g, b, d, depth, &seeds)?;
        for row in &r.rows {
            failures += usize::from(!row.ok);
            t.row(vec![
                json!(d),
                json!(row.seed),
                json!(row.depth),
                num(row.cap),
                num(row.partial_sum),
                num(row.lower),
                num(row.upper),
                json!(row.ok),
            ]);
        }
        summary.insert(
            format!("d{d}"),
            json!({
                "mean": num(r.mean),
                "sum_converges": r.sum_converges,
                "partial_sums": r.partial_sums.iter().map(|&x| num(x)).collect::<Vec<_>>(),
                "median_cap": r.median_cap.iter().map(|&(k, c)| json!([k, num(c)])).collect::<Vec<_>>(),
            }),
        );
    }
    t.aggregate("by_dimension", Value::Object(summary));
    t.check(
        "capacity-certificates",
        failures == 0,
        format!("1/(C_U Σ h m^-n) <= Cap_f <= A/Σ h m^-n failed {failures} times"),
    );
    Ok(t)
}

fn cube_energy(cfg: &ExperimentConfig) -> Result<Table> {
    let b = cfg.alphabet.expect("resolved");
    let g = cfg.gauge.expect("resolved");
    let depth = cfg.depth.expect("resolved");
    let min_depth = cfg.min_depth.expect("resolved");
    let mut t = Table::new(&[
        "d", "kind", "instance", "seed", "depth", "flow", "tree_energy", "euclid_energy", "ratio", "lower", "upper",
        "neighbors_ok", "square_sums_ok", "ratio_ok",
    ]);
    let (mut nb, mut sq, mut rt) = (0, 0, 0);
    for &d in cfg.dims.as_ref().expect("resolved") {
        // one law per dimension: `law` for d = 1, `law_alt` above
        let q = if d == 1 { law(&cfg.law)? } else { law(&cfg.law_alt)? };
        let mut jobs: Vec<(&str, usize, u64, usize)> =
            (min_depth..=depth).map(|n| ("full", n, derive_seed(cfg.seed, "full", (d * 100 + n) as u64), n)).collect();
        jobs.extend((0..instances(cfg)).map(|i| ("cantor", i, derive_seed(cfg.seed, "cantor", (d * 100_000 + i) as u64), depth)));
        let out = par_instances(jobs.len(), |j| {
            let (kind, _, seed, n) = jobs[j];
            let (tree, labels) = if kind == "full" {
                let tree = Tree::regular(2, n)?;
                let labels = CubeLabeling::random(&tree, b, d, seed)?;
                (tree, labels)
            } else {
                cantor_sample(&q, b, d, n, seed)?
            };
            let flows = [("uniform", Flow::uniform_leaf(&tree)), ("random", Flow::random_leaf(&tree, derive_seed(seed, "flow", 0)))];
            flows
                .iter()
                .map(|(name, f)| Ok((*name, cube_energy_check(&tree, &labels, f, &g)?)))
                .collect::<Result<Vec<_>>>()
        })?;
        for ((kind, idx, seed, n), reports) in jobs.iter().zip(out) {
            for (flow, r) in reports {
                nb += usize::from(!r.neighbors_ok);
                sq += usize::from(!r.square_sums_ok);
                rt += usize::from(!r.ratio_ok);
                t.row(vec![
                    json!(d),
                    json!(kind),
                    json!(idx),
                    json!(seed),
                    json!(n),
                    json!(flow),
                    num(r.tree_energy),
                    num(r.euclid_energy),
                    num(r.ratio),
                    num(r.lower),
                    num(r.upper),
                    json!(r.neighbors_ok),
                    json!(r.square_sums_ok),
                    json!(r.ratio_ok),
                ]);
            }
        }
    }
    t.check("neighbor-bound", nb == 0, format!("more than 3^d meeting cubes in {nb} instances"));
    t.check("square-sum-growth", sq == 0, format!("S_(k-1) <= b^d S_k failed in {sq} instances"));
    t.check("energy-ratio", rt == 0, format!("energy ratio outside [b^(-dl), (3b)^d] in {rt} instances"));
    Ok(t)
}

/// Random union of one to three boxes with sides of length at least 0.3.
pub(crate) fn random_boxes(depth: usize, seed: u64) -> BoxUnion {
    let mut r = rng::rng(seed);
    let count = r.gen_range(1..=3);
    let boxes = (0..count)
        .map(|_| {
            (0..depth)
                .map(|_| {
                    let len = r.gen_range(0.3..=1.0);
                    let lo = r.gen_range(0.0..=1.0 - len);
                    [lo, lo + len]
                })
                .collect()
        })
        .collect();
    BoxUnion { boxes }
}

fn discretization(cfg: &ExperimentConfig) -> Result<Table> {
    let q = law(&cfg.law)?;
    let depth = cfg.depth.expect("resolved");
    let trials = cfg.trials.expect("resolved");
    let label_law = cfg.label_law.clone().expect("resolved");
    let resolutions = cfg.resolutions.clone().expect("resolved");
    let n = instances(cfg);
    let mut columns: Vec<String> = ["instance", "seed", "target", "p_mc", "stderr"].iter().map(|s| s.to_string()).collect();
    columns.extend(resolutions.iter().map(|j| format!("exact_j{j}")));
    columns.extend(["z_score", "last_step"].map(String::from));
    let mut t = Table::with_columns(columns);
    let mut z_fail = 0;
    let mut step_fail = 0;
    let mut compared = 0;
    // instances run one after another; trials inside each run in parallel
    for i in 0..n {
        let seed = instance_seed(cfg, i);
        let tree = Tree::sample_gw_with_cap(&q, depth, seed, cfg.caps.max_vertices)?;
        let target = match &cfg.target {
            Some(t) => t.clone(),
            None => TargetPredicate::BoxUnion(random_boxes(depth, derive_seed(seed, "boxes", 0))),
        };
        let mc = target_mc(&tree, &label_law, &target, trials, derive_seed(seed, "trials", 0))?;
        let exact: Vec<Option<f64>> = match (&target, &label_law) {
            (TargetPredicate::BoxUnion(bu), LabelLaw::UniformUnit) => resolutions
                .iter()
                .map(|&j| Ok(Some(target_exact(&tree, &discretize_target(bu, depth, j)?)?)))
                .collect::<Result<_>>()?,
            _ => vec![None; resolutions.len()],
        };
        let last = exact.last().copied().flatten();
        let z = last.map(|e| mc.z_score(e));
        let step = match exact.len() {
            k if k >= 2 => exact[k - 1].zip(exact[k - 2]).map(|(a, b)| (a - b).abs()),
            _ => None,
        };
        if let Some(z) = z {
            compared += 1;
            z_fail += usize::from(z > 4.0);
        }
        if let Some(s) = step {
            step_fail += usize::from(s > 1e-3);
        }
        let mut row = vec![json!(i), json!(seed), serde_json::to_value(&target)?, num(mc.p), num(mc.stderr)];
        row.extend(exact.iter().map(|e| e.map_or(Value::Null, num)));
        row.push(z.map_or(Value::Null, num));
        row.push(step.map_or(Value::Null, num));
        t.row(row);
    }
    t.aggregate("compared", json!(compared));
    t.engineering_check(
        "discretized-exact-vs-monte-carlo",
        z_fail == 0,
        format!("|exact - MC| > 4 stderr in {z_fail} of {compared} targets (statistical tolerance)"),
    );
    t.engineering_check(
        "discretization-stable",
        step_fail == 0,
        format!("change between the two finest resolutions above 1e-3 in {step_fail} targets"),
    );
    Ok(t)
}
