use std::fs;

use replicable::SampleOracle;
use replicable_bench::config::{DistributionSpec, LearnerSpec, TargetSpec};
use replicable_bench::experiments::population;
use replicable_bench::{preset, run_experiment, BenchError, ConfiguredExperiment, ExperimentConfig};

fn small(name: &str) -> ExperimentConfig {
    let mut c = preset(name).unwrap();
    c.trials = 30;
    c
}

#[test]
fn report_files_are_written_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small("aff-parity");
    c.out = Some(dir.path().join("one"));
    let first = run_experiment(&c, 2).unwrap();
    c.out = Some(dir.path().join("two"));
    run_experiment(&c, 1).unwrap();
    for f in ["report.json", "trials.csv"] {
        let a = fs::read(dir.path().join("one").join(f)).unwrap();
        let b = fs::read(dir.path().join("two").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("one/trials.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("trial,seed_label,output_a,output_b,equal,err_a,err_b"));
    assert_eq!(lines.count(), 30);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("one/report.json")).unwrap()).unwrap();
    assert!(json["config"].get("out").is_none());
    assert_eq!(json["summary"]["trials"], 30);
    assert_eq!(json["summary"]["disagreements"], first.summary.disagreements);
}

#[test]
fn failed_executions_are_logged() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig {
        n: Some(10),
        ..small("ows-learn")
    };
    c.out = Some(dir.path().to_path_buf());
    let r = run_experiment(&c, 1).unwrap();
    assert_eq!(r.summary.failed_executions, 60);
    assert_eq!(r.summary.disagreements, 30);
    let csv = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains("ERROR: "), "{row}");
    assert!(row.ends_with(",false,,"), "{row}");
}

#[test]
fn baseline_learners() {
    let constant = run_experiment(&preset("constant").unwrap(), 2).unwrap();
    assert_eq!(constant.summary.rho_hat, 0.0);
    assert!(constant.certified);
    let coin = run_experiment(&preset("coin").unwrap(), 2).unwrap();
    assert_eq!(coin.summary.trials, 1000);
    assert!((coin.summary.rho_hat - 0.5).abs() <= 0.06, "{}", coin.summary.rho_hat);
}

#[test]
fn populations_match_their_specs() {
    let c = preset("r-quantile").unwrap();
    let pop = population(&c).unwrap();
    assert_eq!(pop.dim(), 6);
    assert_eq!(pop.support().len(), 64);
    let indices: Vec<u64> = pop.support().iter().map(|e| e.x.to_index()).collect();
    assert_eq!(indices, (0..64).collect::<Vec<_>>());

    let mut c = preset("r-mean").unwrap();
    c.distribution = DistributionSpec::Bernoulli { p: 0.3 };
    let pop = population(&c).unwrap();
    assert!((pop.mass_where(|e| e.x.get(0) && e.y) - 0.3).abs() < 1e-12);
    assert_eq!(pop.mass_where(|e| e.x.get(0) != e.y), 0.0);

    let pop = population(&preset("ows-learn").unwrap()).unwrap();
    assert_eq!(pop.dim(), 36);
    assert_eq!(pop.support().len(), 32);

    let pop = population(&preset("dp2rep-weak").unwrap()).unwrap();
    assert_eq!(pop.support().len(), 16);
    assert_eq!(pop.mass_where(|e| e.y), 1.0 / 16.0);
    assert!(pop.support().iter().filter(|e| e.y).all(|e| e.x.to_index() == 0b0110));
}

#[test]
fn quantile_error_follows_the_cdf() {
    let exp = ConfiguredExperiment::new(small("r-quantile")).unwrap();
    let r = replicable_bench::estimate_replicability("q", &exp, 1, 30, 1, 0.1);
    for t in &r.records {
        let x: u64 = t.a.output.as_ref().unwrap().parse().unwrap();
        let f = |v: u64| v as f64 / 64.0;
        let expected = (0.5 - f(x)).max(f(x - 1) - 0.5).max(0.0);
        assert!((t.a.error.unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn configs_load_from_json() {
    let c = preset("parity-lift").unwrap();
    assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    let text = r#"{
        "experiment": "custom",
        "distribution": {"kind": "product", "p": [0.6, 0.7, 0.8]},
        "target": {"kind": "affine-parity", "w": 5, "b": false},
        "learner": {"kind": "r-aff-parity"},
        "alpha": 0.1, "beta": 0.05, "rho": 0.2, "trials": 40, "seed": 3
    }"#;
    let c = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(c.target, Some(TargetSpec::AffineParity { w: 5, b: false }));
    assert_eq!(c.learner, LearnerSpec::RAffParity);
    let bad = text.replace("\"seed\": 3", "\"seed\": 3, \"colour\": 1");
    match ExperimentConfig::from_json(&bad) {
        Err(BenchError::Config { path, message }) => {
            assert_eq!(path, "$");
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let bad = text.replace("0.7", "-0.7");
    assert!(matches!(ExperimentConfig::from_json(&bad), Err(BenchError::Config { path, .. }) if path == "distribution.p[1]"));
    let bad = text.replace("\"trials\": 40", "\"trials\": 40, \"n\": 5");
    assert!(matches!(ExperimentConfig::from_json(&bad), Err(BenchError::Config { path, .. }) if path == "n"));
    let bad = text.replace("r-aff-parity", "r-ows");
    assert!(matches!(ExperimentConfig::from_json(&bad), Err(BenchError::Config { path, .. }) if path == "learner.kind"));
}
