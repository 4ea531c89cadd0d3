//! Command-line runner for the seeded experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use treepolar::experiments::{self, Experiment, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "polarlab", version, about = "Run percolation and capacity experiments on random trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file; command-line flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    depth: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Percolation probability against percolation-gauge capacity
    LyonsCheck(Common),
    /// Target probability against product-kernel capacity
    #[command(name = "sandwich-capK")]
    SandwichCapK(Common),
    /// Two-sided bounds through the regularity constants
    Regularity(Common),
    /// Exact probability ratios for tree pairs of equal mean
    Equipolar(Common),
    /// Sampled trees against their dominating spherical tree
    CompareSpherical(Common),
    /// Certified domination in a varying environment
    BpveDominate(Common),
    /// Flow-constant profiles for finite and heavy-tailed laws
    VarianceBlowup(Common),
    /// Capacity certificates for random Cantor sets
    CantorCap(Common),
    /// Cube neighbors, square sums and the energy ratio
    #[command(name = "theorem32")]
    CubeEnergy(Common),
    /// Discretized exact values against Monte Carlo
    TargetMc(Common),
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        use Command::*;
        match self {
            LyonsCheck(c) => (Experiment::LyonsCheck, c),
            SandwichCapK(c) => (Experiment::SandwichCapK, c),
            Regularity(c) => (Experiment::Regularity, c),
            Equipolar(c) => (Experiment::Equipolar, c),
            CompareSpherical(c) => (Experiment::CompareSpherical, c),
            BpveDominate(c) => (Experiment::BpveDominate, c),
            VarianceBlowup(c) => (Experiment::VarianceBlowup, c),
            CantorCap(c) => (Experiment::CantorCap, c),
            CubeEnergy(c) => (Experiment::CubeEnergy, c),
            TargetMc(c) => (Experiment::TargetMc, c),
        }
    }
}

fn execute(experiment: Experiment, args: Common) -> treepolar::Result<bool> {
    let mut config = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?;
            if cfg.experiment != experiment {
                return Err(treepolar::Error::InvalidArgument(format!(
                    "config is for `{}` but `{experiment}` was requested",
                    cfg.experiment
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(experiment),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(d) = args.depth {
        config.depth = Some(d);
        if config.min_depth.is_some_and(|m| m > d) {
            config.min_depth = Some(d);
        }
    }
    let format: Format = args.format.parse()?;
    let report = experiments::run(&config)?;
    match &args.out {
        Some(path) => experiments::report_emit(&report, format, path)?,
        None => print!("{}", experiments::render(&report, format)?),
    }
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let (experiment, args) = Cli::parse().command.split();
    match execute(experiment, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("polarlab: {e}");
            ExitCode::from(2)
        }
    }
}
