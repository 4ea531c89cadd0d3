//! Compare a sampled tree with the spherically symmetric tree that
//! dominates its growth, and run the certified comparison for a tree grown
//! in a varying environment.
//!
//! `cargo run --release --example domination`

use treepolar::product::{bpve_dominates, compare_spherical};
use treepolar::target::TargetTrie;
use treepolar::{Environment, OffspringLaw, Tree};

fn main() -> treepolar::Result<()> {
    let law = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)])?;
    let tree = Tree::sample_gw(&law, 3, 5)?;
    let mut worst: f64 = 0.0;
    for mask in 0..256u128 {
        let trie = TargetTrie::from_mask(2, 3, mask)?;
        let r = compare_spherical(&tree, &trie, None)?;
        assert!(r.ok);
        if r.p_t > 0.0 {
            worst = worst.max(r.p_gamma / r.p_t);
        }
    }
    println!("tree sizes {:?}: all 256 targets dominated, max ratio {worst:.4}", tree.level_sizes());

    let env = Environment::alternating(law, OffspringLaw::from_pairs(&[(2, 0.5), (4, 0.5)])?, 6);
    let gamma = Tree::sample_bpve(&env, 6, 2)?;
    let delta = Tree::dominating_spherical(&env.cumulative_means()[..=6], 1.0)?;
    let tries = (0..10).map(|s| TargetTrie::random(2, 6, 0.5, s)).collect::<treepolar::Result<Vec<_>>>()?;
    let r = bpve_dominates(&gamma, &delta, &env, &tries, None)?;
    println!(
        "environment tree sizes {:?}\ncertified factor {:.4}, smallest observed ratio {:?}, all hold: {}",
        gamma.level_sizes(),
        r.certified,
        r.min_ratio,
        r.ok
    );
    Ok(())
}
