//! Target sets of label words stored as layered automata, and the exact
//! probability that a tree contains a ray with labels in the target.
//!
//! `cargo run --example targets`

use treepolar::target::{target_exact, target_exact_rational, TargetTrie};
use treepolar::{OffspringLaw, Tree};

fn main() -> treepolar::Result<()> {
    // words over {0, 1, 2} of length 3 that avoid the letter 2 at level 1
    let trie = TargetTrie::product(3, &[vec![0, 1, 2], vec![0, 1], vec![0, 1, 2]])?;
    println!("{} words, fraction {:.4}, {} nodes", trie.word_count(), trie.fraction(), trie.node_count());

    let law = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)])?;
    let tree = Tree::sample_gw(&law, 3, 4)?;
    let p = target_exact(&tree, &trie)?;
    let q = target_exact_rational(&tree, &trie)?;
    println!("P(tree hits target) = {p:.12} = {q}");

    let words = TargetTrie::from_words(2, 4, &[vec![0, 0, 0, 0], vec![1, 1, 1, 1], vec![0, 1, 0, 1]])?;
    println!("three binary words: {:?}", words.words()?);
    let regular = Tree::regular(2, 4)?;
    println!("binary tree height 4 hits them with probability {:.6}", target_exact(&regular, &words)?);

    let random = TargetTrie::random(2, 6, 0.3, 9)?;
    println!("random target: {} of 64 words, P = {:.6}", random.word_count(), target_exact(&Tree::sample_gw(&law, 6, 1)?, &random)?);
    Ok(())
}
