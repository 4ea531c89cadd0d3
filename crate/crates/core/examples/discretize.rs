//! Continuous labels and a box-union target: exact values on dyadic
//! discretizations against Monte Carlo.
//!
//! `cargo run --release --example discretize`

use treepolar::target::{discretize_target, target_exact, target_mc, BoxUnion, LabelLaw, TargetPredicate};
use treepolar::Tree;

fn main() -> treepolar::Result<()> {
    let tree = Tree::regular(2, 3)?;
    let boxes = BoxUnion {
        boxes: vec![
            vec![[0.0, 0.6], [0.2, 0.9], [0.1, 0.5]],
            vec![[0.3, 1.0], [0.0, 0.5], [0.4, 1.0]],
        ],
    };
    for j in [4, 8, 12] {
        let trie = discretize_target(&boxes, 3, j)?;
        println!("j = {j:2}: {} trie nodes, P = {:.6}", trie.node_count(), target_exact(&tree, &trie)?);
    }
    let mc = target_mc(&tree, &LabelLaw::UniformUnit, &TargetPredicate::BoxUnion(boxes), 200_000, 1)?;
    println!("Monte Carlo: {:.6} ± {:.6}", mc.p, mc.stderr);
    Ok(())
}
