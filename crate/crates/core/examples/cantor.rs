//! Random Cantor sets in the unit cube: tree and Euclidean energies and
//! the capacity certificates.
//!
//! `cargo run --release --example cantor`

use treepolar::euclid::{cantor_sample, cap_criterion, cube_energy_check, EuclidGauge};
use treepolar::{Flow, OffspringLaw};

fn main() -> treepolar::Result<()> {
    let law = OffspringLaw::from_pairs(&[(2, 0.5), (3, 0.5)])?;
    let g = EuclidGauge::Power { alpha: 0.5 };
    let (tree, labels) = cantor_sample(&law, 2, 2, 6, 1)?;
    println!("Cantor sample in the square: {} cubes at the bottom level", tree.level_size(6));

    let r = cube_energy_check(&tree, &labels, &Flow::uniform_leaf(&tree), &g)?;
    println!(
        "tree energy {:.4}, Euclidean energy {:.4}, ratio {:.4} in [{}, {}]",
        r.tree_energy, r.euclid_energy, r.ratio, r.lower, r.upper
    );
    println!("neighbors per level {:?} (bound {})", r.max_neighbors, r.neighbor_bound);

    let seeds: Vec<u64> = (0..5).collect();
    let c = cap_criterion(&law, &g, 2, 2, 8, &seeds)?;
    println!("partial sums of the criterion series: {:?}", c.partial_sums);
    for row in c.rows.iter().filter(|r| r.depth == 8) {
        println!("seed {}: {:.5} <= Cap = {:.5} <= {:.5}", row.seed, row.lower, row.cap, row.upper);
    }
    Ok(())
}
