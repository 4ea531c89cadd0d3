//! Experiment reports: serialization, reproducibility and the command line.

use std::process::Command;

use treepolar::experiments::{render, run, Experiment, ExperimentConfig, ExperimentReport, Format};

fn small(e: Experiment) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(e);
    c.seed = 17;
    c.instances = Some(3);
    match e {
        Experiment::LyonsCheck => c.depth = Some(5),
        Experiment::SandwichCapK => c.depth = Some(3),
        Experiment::Regularity => {
            c.depth = Some(4);
            c.tries = Some(3);
        }
        Experiment::Equipolar => {
            c.depth = Some(5);
            c.tries = Some(5);
        }
        Experiment::BpveDominate => {
            c.depth = Some(4);
            c.tries = Some(3);
        }
        Experiment::VarianceBlowup => {
            c.depth = Some(8);
            c.window = Some([4, 8]);
        }
        Experiment::CantorCap => c.depth = Some(5),
        Experiment::CubeEnergy => {
            c.depth = Some(4);
            c.min_depth = Some(3);
        }
        Experiment::TargetMc => {
            c.depth = Some(3);
            c.trials = Some(5_000);
            c.resolutions = Some(vec![6, 8]);
        }
        Experiment::CompareSpherical => c.depth = Some(2),
    }
    c
}

#[test]
fn every_experiment_runs_small() {
    for e in Experiment::ALL {
        let r = run(&small(e)).unwrap();
        assert_eq!(r.experiment, e);
        assert!(!r.checks.is_empty(), "{e}");
        assert!(!r.rows.is_empty(), "{e}");
        assert!(r.rows.iter().all(|row| row.len() == r.columns.len()), "{e}");
        // statistical checks are too noisy at this size to assert
        if e != Experiment::TargetMc && e != Experiment::VarianceBlowup {
            assert!(r.passed(), "{e}: {:?}", r.checks);
        }
    }
}

#[test]
fn reports_are_reproducible() {
    for e in Experiment::ALL {
        let a = run(&small(e)).unwrap().without_metadata();
        let b = run(&small(e)).unwrap().without_metadata();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap(), "{e}");
    }
}

#[test]
fn seeds_change_results() {
    let a = run(&small(Experiment::LyonsCheck)).unwrap();
    let mut c = small(Experiment::LyonsCheck);
    c.seed = 18;
    let b = run(&c).unwrap();
    assert_ne!(a.rows, b.rows);
}

#[test]
fn json_round_trip() {
    for e in Experiment::ALL {
        let r = run(&small(e)).unwrap();
        let text = render(&r, Format::Json).unwrap();
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r, "{e}");
        // the config inside a report replays the same report
        let again = run(&back.config).unwrap();
        assert_eq!(again.without_metadata().rows, r.rows);
    }
}

#[test]
fn lyons_rows_for_exact_instance() {
    let mut c = ExperimentConfig::new(Experiment::LyonsCheck);
    c.law = Some(serde_json::from_str(r#"{"weights": [0, 0, 1]}"#).unwrap());
    c.depth = Some(2);
    c.min_depth = Some(2);
    c.instances = Some(1);
    c.retention = Some([0.5, 0.5]);
    let r = run(&c).unwrap();
    let p = r.column("P").unwrap()[0].as_f64().unwrap();
    let cap = r.column("cap").unwrap()[0].as_f64().unwrap();
    assert!((p - 39.0 / 64.0).abs() < 1e-15);
    assert!((cap - 0.5).abs() < 1e-15);
    assert!((r.column("ratio").unwrap()[0].as_f64().unwrap() - 1.21875).abs() < 1e-12);
}

#[test]
fn csv_has_one_line_per_row() {
    let r = run(&small(Experiment::Regularity)).unwrap();
    let csv = render(&r, Format::Csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), r.rows.len() + 1);
    assert_eq!(lines[0], r.columns.join(","));
}

#[test]
fn empty_batch_gives_header_only_csv() {
    let mut c = small(Experiment::LyonsCheck);
    c.instances = Some(0);
    let r = run(&c).unwrap();
    assert_eq!(render(&r, Format::Csv).unwrap(), "instance,seed,depth,leaves,P,cap,ratio,pass\n");
}

#[test]
fn resource_caps_are_errors() {
    let mut c = small(Experiment::LyonsCheck);
    c.depth = Some(12);
    c.min_depth = Some(12);
    c.caps.max_vertices = 50;
    assert!(run(&c).is_err());
    let mut c = small(Experiment::TargetMc);
    c.trials = Some(c.caps.max_trials + 1);
    assert!(run(&c).is_err());
}

fn polarlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polarlab"))
}

#[test]
fn cli_passes_and_writes_reports() {
    let dir = std::env::temp_dir().join(format!("polarlab-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, serde_json::to_string(&small(Experiment::Regularity)).unwrap()).unwrap();
    let out = dir.join("report.csv");
    let status = polarlab()
        .args(["regularity", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--format", "csv", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("instance,target,seed,A,C_U"));

    let json = polarlab().args(["lyons-check", "--depth", "4", "--seed", "3"]).output().unwrap();
    assert_eq!(json.status.code(), Some(0));
    let report: ExperimentReport = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(report.config.seed, 3);
    assert_eq!(report.config.depth, Some(4));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn cli_reports_failures_and_errors() {
    let dir = std::env::temp_dir().join(format!("polarlab-fail-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    // trees of very different growth are far from equipolar at this height
    let mut c = ExperimentConfig::new(Experiment::Equipolar);
    c.law = Some(serde_json::from_str(r#"{"weights": [0, 0, 0, 0, 0, 0, 1]}"#).unwrap());
    c.law_alt = Some(serde_json::from_str(r#"{"weights": [0, 1]}"#).unwrap());
    c.depth = Some(4);
    c.instances = Some(4);
    c.tries = Some(5);
    c.retention_levels = Some(vec![0.2]);
    let cfg = dir.join("equipolar.json");
    std::fs::write(&cfg, serde_json::to_string(&c).unwrap()).unwrap();
    let out = polarlab().arg("equipolar").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(&cfg, r#"{"version": 1, "experiment": "equipolar", "bogus": 3}"#).unwrap();
    let out = polarlab().arg("equipolar").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = polarlab().args(["lyons-check", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}
