//! Sample Galton-Watson trees and look at their level growth.
//!
//! `cargo run --example tree_sampling`

use treepolar::tree::{geometric_means, OffspringLaw, Tree};

fn main() -> treepolar::Result<()> {
    let law = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)])?;
    println!("law: mean {} variance {}", law.mean(), law.variance());

    for seed in 0..3 {
        let tree = Tree::sample_gw(&law, 8, seed)?;
        let stats = tree.stats(&geometric_means(law.mean(), 8))?;
        println!(
            "seed {seed}: sizes {:?}  Z_N/m^N = {:.3}  max Z_n/m^n = {:.3}",
            stats.level_sizes, stats.martingale, stats.growth_constant
        );
    }

    // trees round-trip through a compact preorder child-count string
    let small = Tree::sample_gw(&law, 3, 7)?;
    let text = small.to_preorder_string();
    println!("preorder encoding: {text}");
    assert_eq!(Tree::from_preorder_str(&text)?, small);
    println!("nested json: {}", small.to_nested_json());
    Ok(())
}
