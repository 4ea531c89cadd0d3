//! Exact survival probability of independent percolation against the
//! capacity of the matching gauge.
//!
//! `cargo run --example percolation`

use treepolar::flow::capacity;
use treepolar::target::{survival_exact, survival_mc};
use treepolar::{Gauge, OffspringLaw, Tree};

fn main() -> treepolar::Result<()> {
    let tree = Tree::regular(2, 2)?;
    let p = [0.5, 0.5];
    let prob = survival_exact(&tree, &p)?;
    let cap = capacity(&tree, &Gauge::percolation(&p)?)?.value;
    println!("binary height 2, p = 1/2: P = {prob} (39/64), cap = {cap}, ratio {}", prob / cap);

    let law = OffspringLaw::from_pairs(&[(1, 0.5), (3, 0.5)])?;
    for seed in 0..5 {
        let tree = Tree::sample_gw(&law, 10, seed)?;
        let p: Vec<f64> = (0..10).map(|k| 0.5 + 0.04 * k as f64).collect();
        let prob = survival_exact(&tree, &p)?;
        let cap = capacity(&tree, &Gauge::percolation(&p)?)?.value;
        let mc = survival_mc(&tree, &p, 20_000, seed)?;
        println!(
            "seed {seed}: P = {prob:.5} (MC {:.5} ± {:.5}), cap = {cap:.5}, P/cap = {:.4}",
            mc.p,
            mc.stderr,
            prob / cap
        );
    }
    Ok(())
}
