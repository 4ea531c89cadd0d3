//! Run a named experiment from code and print its checks.
//!
//! `cargo run --release --example experiment`

use treepolar::experiments::{render, run, Experiment, ExperimentConfig, Format};

fn main() -> treepolar::Result<()> {
    let mut cfg = ExperimentConfig::new(Experiment::LyonsCheck);
    cfg.seed = 42;
    cfg.instances = Some(20);
    let report = run(&cfg)?;
    for c in &report.checks {
        println!("{}: {} ({})", c.name, if c.passed { "pass" } else { "fail" }, c.detail);
    }
    print!("{}", render(&report, Format::Csv)?);
    Ok(())
}
