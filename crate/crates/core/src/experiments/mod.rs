//! Named, seeded experiments that run the comparison inequalities over
//! batches of random instances and collect the results in a report.

mod suites;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::euclid::EuclidGauge;
use crate::target::{LabelLaw, TargetPredicate};
use crate::tree::{HeavyTailSpec, LawSpec, DEFAULT_VERTEX_CAP};

pub const CONFIG_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LyonsCheck,
    #[serde(rename = "sandwich-capK")]
    SandwichCapK,
    Regularity,
    Equipolar,
    CompareSpherical,
    BpveDominate,
    VarianceBlowup,
    CantorCap,
    #[serde(rename = "theorem32")]
    CubeEnergy,
    TargetMc,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::LyonsCheck,
        Experiment::SandwichCapK,
        Experiment::Regularity,
        Experiment::Equipolar,
        Experiment::CompareSpherical,
        Experiment::BpveDominate,
        Experiment::VarianceBlowup,
        Experiment::CantorCap,
        Experiment::CubeEnergy,
        Experiment::TargetMc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::LyonsCheck => "lyons-check",
            Experiment::SandwichCapK => "sandwich-capK",
            Experiment::Regularity => "regularity",
            Experiment::Equipolar => "equipolar",
            Experiment::CompareSpherical => "compare-spherical",
            Experiment::BpveDominate => "bpve-dominate",
            Experiment::VarianceBlowup => "variance-blowup",
            Experiment::CantorCap => "cantor-cap",
            Experiment::CubeEnergy => "theorem32",
            Experiment::TargetMc => "target-mc",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

/// Hard limits; exceeding one is an error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceCaps {
    pub max_vertices: usize,
    pub max_product_pairs: usize,
    pub max_trials: u64,
}

impl Default for ResourceCaps {
    fn default() -> Self {
        Self { max_vertices: DEFAULT_VERTEX_CAP, max_product_pairs: crate::product::PRODUCT_CAP, max_trials: 100_000_000 }
    }
}

/// Experiment parameters. Unset fields take per-experiment defaults, which
/// are written back into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "config_version")]
    pub version: u32,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Tree height `N`; the largest height when `min_depth` is set.
    #[serde(default)]
    pub depth: Option<usize>,
    /// Instances run at heights cycling through `min_depth..=depth`.
    #[serde(default)]
    pub min_depth: Option<usize>,
    #[serde(default)]
    pub instances: Option<usize>,
    /// Target sets per instance.
    #[serde(default)]
    pub tries: Option<usize>,
    /// Word density of random targets.
    #[serde(default)]
    pub density: Option<f64>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub law: Option<LawSpec>,
    /// The comparison law (or the second law of an alternating environment).
    #[serde(default)]
    pub law_alt: Option<LawSpec>,
    /// Range for random retention probabilities.
    #[serde(default)]
    pub retention: Option<[f64; 2]>,
    /// Retention values for percolation-type targets.
    #[serde(default)]
    pub retention_levels: Option<Vec<f64>>,
    #[serde(default)]
    pub alphabet: Option<u32>,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default)]
    pub gauge: Option<EuclidGauge>,
    #[serde(default)]
    pub target: Option<TargetPredicate>,
    #[serde(default)]
    pub label_law: Option<LabelLaw>,
    /// Discretization resolutions.
    #[serde(default)]
    pub resolutions: Option<Vec<u32>>,
    /// Heights over which profile trends are measured.
    #[serde(default)]
    pub window: Option<[usize; 2]>,
    /// Sample both trees of a pair from the same seed.
    #[serde(default)]
    pub same_seeds: Option<bool>,
    #[serde(default)]
    pub caps: ResourceCaps,
}

fn config_version() -> u32 {
    CONFIG_VERSION
}

fn weights(pairs: &[(usize, f64)]) -> LawSpec {
    let k = pairs.iter().map(|p| p.0).max().unwrap_or(0);
    let mut w = vec![0.0; k + 1];
    for &(i, p) in pairs {
        w[i] = p;
    }
    LawSpec::Weights { weights: w }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            version: CONFIG_VERSION,
            experiment,
            seed: 0,
            depth: None,
            min_depth: None,
            instances: None,
            tries: None,
            density: None,
            trials: None,
            law: None,
            law_alt: None,
            retention: None,
            retention_levels: None,
            alphabet: None,
            dims: None,
            gauge: None,
            target: None,
            label_law: None,
            resolutions: None,
            window: None,
            same_seeds: None,
            caps: ResourceCaps::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::InvalidArgument(format!("config version {} is not supported", cfg.version)));
        }
        Ok(cfg)
    }

    /// Fill every unset field with the experiment's default.
    pub fn resolved(&self) -> Self {
        use Experiment::*;
        let mut c = self.clone();
        let finite = weights(&[(1, 0.5), (3, 0.5)]);
        let (depth, min_depth, instances) = match c.experiment {
            LyonsCheck => (10, 1, 200),
            SandwichCapK => (5, 1, 200),
            Regularity => (6, 6, 100),
            Equipolar => (10, 10, 200),
            CompareSpherical => (3, 3, 20),
            BpveDominate => (6, 6, 50),
            VarianceBlowup => (16, 16, 200),
            CantorCap => (8, 8, 10),
            CubeEnergy => (8, 0, 50),
            TargetMc => (4, 4, 10),
        };
        let n = *c.depth.get_or_insert(depth);
        // fixed-height suites follow an overridden height
        c.min_depth.get_or_insert(if min_depth == depth { n } else { min_depth.min(n) });
        c.instances.get_or_insert(instances);
        let law = match c.experiment {
            Equipolar => weights(&[(2, 1.0)]),
            CantorCap => weights(&[(2, 0.5), (3, 0.5)]),
            TargetMc => weights(&[(2, 1.0)]),
            CubeEnergy => weights(&[(1, 0.5), (2, 0.5)]),
            _ => finite.clone(),
        };
        c.law.get_or_insert(law);
        match c.experiment {
            Equipolar => {
                c.law_alt.get_or_insert(finite);
                c.retention_levels.get_or_insert(vec![0.55, 0.7, 0.9]);
                c.tries.get_or_insert(50);
                c.same_seeds.get_or_insert(false);
            }
            VarianceBlowup => {
                c.law_alt.get_or_insert(LawSpec::HeavyTail { heavy_tail: HeavyTailSpec { mean: 2.0, eps: 0.5, cutoff: 1000 } });
                c.window.get_or_insert([8, 16]);
            }
            BpveDominate => {
                c.law_alt.get_or_insert(weights(&[(2, 0.5), (4, 0.5)]));
                c.tries.get_or_insert(10);
                c.density.get_or_insert(0.5);
            }
            LyonsCheck => {
                c.retention.get_or_insert([0.4, 1.0]);
            }
            SandwichCapK => {
                c.density.get_or_insert(0.5);
            }
            Regularity => {
                c.tries.get_or_insert(100);
                c.density.get_or_insert(0.5);
            }
            CantorCap => {
                c.alphabet.get_or_insert(2);
                c.dims.get_or_insert(vec![2]);
                c.gauge.get_or_insert(EuclidGauge::Power { alpha: 0.5 });
            }
            CubeEnergy => {
                c.alphabet.get_or_insert(2);
                c.dims.get_or_insert(vec![1, 2]);
                c.gauge.get_or_insert(EuclidGauge::Power { alpha: 0.5 });
                c.law_alt.get_or_insert(weights(&[(2, 1.0 / 3.0), (3, 1.0 / 3.0), (4, 1.0 / 3.0)]));
            }
            TargetMc => {
                c.trials.get_or_insert(1_000_000);
                c.resolutions.get_or_insert(vec![10, 12]);
                c.label_law.get_or_insert(LabelLaw::UniformUnit);
            }
            CompareSpherical => {
                c.alphabet.get_or_insert(2);
            }
        }
        c.alphabet.get_or_insert(2);
        c
    }
}

/// One asserted inequality, aggregated over the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The threshold is an engineering choice rather than a proven bound.
    pub engineering: bool,
    pub detail: String,
}

/// Values that vary between runs and are excluded from reproducibility.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeMetadata {
    pub crate_version: String,
    pub threads: usize,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    /// Column names of `rows`, in order.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub aggregates: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
    pub metadata: RuntimeMetadata,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The report with runtime metadata blanked, for reproducibility comparisons.
    pub fn without_metadata(&self) -> Self {
        let mut r = self.clone();
        r.metadata = RuntimeMetadata { crate_version: String::new(), threads: 0, elapsed_ms: 0 };
        r
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

/// Builder collecting rows, aggregates and checks.
pub(crate) struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
    aggregates: serde_json::Map<String, Value>,
    checks: Vec<Check>,
}

impl Table {
    pub(crate) fn new(columns: &[&str]) -> Self {
        Self::with_columns(columns.iter().map(|s| s.to_string()).collect())
    }

    pub(crate) fn with_columns(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new(), aggregates: serde_json::Map::new(), checks: Vec::new() }
    }

    pub(crate) fn row(&mut self, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub(crate) fn aggregate(&mut self, key: &str, value: impl Into<Value>) {
        self.aggregates.insert(key.to_string(), value.into());
    }

    pub(crate) fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, engineering: false, detail });
    }

    pub(crate) fn engineering_check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, engineering: true, detail });
    }
}

/// JSON number, or `null` for non-finite values.
pub(crate) fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Run an experiment. Unset configuration fields take their defaults.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let config = config.resolved();
    if let Some(t) = config.trials {
        if t > config.caps.max_trials {
            return Err(Error::TooLarge { what: "Monte Carlo trials", needed: t as u128, cap: config.caps.max_trials as u128 });
        }
    }
    let table = suites::dispatch(&config)?;
    Ok(ExperimentReport {
        version: REPORT_VERSION,
        experiment: config.experiment,
        config,
        columns: table.columns,
        rows: table.rows,
        aggregates: table.aggregates,
        checks: table.checks,
        metadata: RuntimeMetadata {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            elapsed_ms: start.elapsed().as_millis() as u64,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

fn csv_field(v: &Value) -> String {
    let s = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// Render a report. CSV carries one line per row under the report's
/// columns; JSON carries the whole report.
pub fn render(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => {
            let mut out = report.columns.iter().map(|c| csv_field(&Value::String(c.clone()))).collect::<Vec<_>>().join(",");
            out.push('\n');
            for row in &report.rows {
                out.push_str(&row.iter().map(csv_field).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
            Ok(out)
        }
    }
}

/// Write a rendered report to `path`.
pub fn report_emit(report: &ExperimentReport, format: Format, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, render(report, format)?)?;
    Ok(())
}
