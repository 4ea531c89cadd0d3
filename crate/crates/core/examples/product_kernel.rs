//! Capacity of the tree-times-target product under the hitting kernel,
//! and the regularity constants that compare it with a capacity on the
//! target alone.
//!
//! `cargo run --release --example product_kernel`

use treepolar::product::{cap_k, cap_k_options, regularity_bounds, ProductTree};
use treepolar::target::{target_exact, TargetTrie};
use treepolar::tree::geometric_means;
use treepolar::{OffspringLaw, Tree};

fn main() -> treepolar::Result<()> {
    let law = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)])?;
    for seed in 0..5 {
        let tree = Tree::sample_gw(&law, 4, seed)?;
        let trie = TargetTrie::random(2, 4, 0.5, seed + 100)?;
        let pt = ProductTree::new(&tree, &trie)?;
        let cap = cap_k(&pt, cap_k_options())?;
        let p = target_exact(&tree, &trie)?;
        println!(
            "seed {seed}: {} atoms, cap_K = {:.6}, P = {p:.6}, P/cap_K = {:.3}",
            pt.leaf_count() * pt.boundary_len(),
            cap.value,
            p / cap.value
        );

        let r = regularity_bounds(&tree, &trie, &geometric_means(2.0, 4), false)?;
        println!(
            "         A = {:.3}, C_U = {:.3}, Cap_phi/C_U = {:.5} <= P <= 8 A Cap_phi = {:.5}",
            r.a, r.c_u, r.lower, r.upper
        );
    }
    Ok(())
}
