//! Capacity of a tree under a gauge, from the conductance recursion and
//! from a direct minimization of the energy over unit flows.
//!
//! `cargo run --example capacity`

use treepolar::flow::{capacity, capacity_frank_wolfe, energy, FwOptions};
use treepolar::{Flow, Gauge, Tree};

fn main() -> treepolar::Result<()> {
    let binary = Tree::regular(2, 2)?;
    let gauge = Gauge::from_values(&[1.0, 2.0, 4.0])?;
    let cap = capacity(&binary, &gauge)?;
    println!("binary tree of height 2, f = (1, 2, 4): cap = {} (expected 1/2)", cap.value);

    let uniform = Flow::uniform_leaf(&binary);
    let e = energy(&binary, &gauge, &uniform)?;
    println!("uniform flow energy {} = 1/cap", e.energy);

    let law = treepolar::OffspringLaw::from_pairs(&[(1, 0.4), (2, 0.3), (3, 0.3)])?;
    let tree = Tree::sample_gw(&law, 6, 11)?;
    let gauge = Gauge::power(1.8, 6)?;
    let exact = capacity(&tree, &gauge)?;
    let (fw, sol) = capacity_frank_wolfe(&tree, &gauge, FwOptions::default())?;
    println!(
        "GW tree with {} leaves: recursion {:.10}, Frank-Wolfe {:.10} after {} iterations",
        tree.level_size(6),
        exact.value,
        fw,
        sol.iterations
    );

    // no flow beats the optimal one
    let random = Flow::random_leaf(&tree, 3);
    let e = energy(&tree, &gauge, &random)?.energy;
    println!("random flow energy {e:.6} >= minimum {:.6}", exact.min_energy);
    Ok(())
}
