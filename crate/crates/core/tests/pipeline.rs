use std::process::Command;

use bayes_bmd::data::cumene;
use bayes_bmd::pipeline::{analyze, AnalysisConfig, PriorsInput};
use bayes_bmd::{Error, ModelId, QuantalDataset};

const BIN: &str = env!("CARGO_BIN_EXE_bmd");

fn data_file(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn small_config(models: &[ModelId]) -> AnalysisConfig {
    AnalysisConfig {
        iterations: 10_000,
        seed: 4,
        models: models.to_vec(),
        priors: PriorsInput::cumene(),
        ..AnalysisConfig::default()
    }
}

#[test]
fn priors_file_matches_builtin_cumene_priors() {
    let from_file = PriorsInput::from_json_path(data_file("cumene_priors.json")).unwrap();
    assert_eq!(from_file, PriorsInput::cumene());
    let spec = from_file.resolve().unwrap();
    assert!((spec.xi.alpha - 0.534067).abs() < 1e-5);
    assert!((spec.gamma0.b - 12.311779).abs() < 1e-4);
}

#[test]
fn unknown_prior_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    std::fs::write(&path, r#"{"xi": "objective", "delta": "objective"}"#).unwrap();
    assert!(PriorsInput::from_json_path(&path).is_err());
}

#[test]
fn single_model_takes_all_weight() {
    let report = analyze(&cumene(), &small_config(&[ModelId::QuantalLinear])).unwrap();
    assert_eq!(report.models.len(), 1);
    assert!((report.models[0].weight - 1.0).abs() < 1e-15);
    assert_eq!(report.bma.bmd, report.models[0].bmd);
    assert_eq!(report.bma.bmdl, report.models[0].bmdl);
}

#[test]
fn report_is_in_original_dose_units() {
    let report = analyze(
        &cumene(),
        &small_config(&[ModelId::QuantalLinear, ModelId::LogLogistic]),
    )
    .unwrap();
    assert_eq!(report.dose_scale, 500.0);
    let detail = report.detail.as_ref().unwrap();
    for (row, post) in report.models.iter().zip(&detail.per_model) {
        assert!((row.bmd - post.bmd_mean * 500.0).abs() < 1e-9 * row.bmd);
        assert!((row.bmdl - post.bmdl * 500.0).abs() < 1e-9 * row.bmdl);
        assert!(row.bmdl < row.bmd);
    }
    assert!((report.bma.bmdl - detail.bma_bmdl * 500.0).abs() < 1e-9 * report.bma.bmdl);
    let w: f64 = report.models.iter().map(|r| r.weight).sum();
    assert!((w - 1.0).abs() < 1e-12);
}

#[test]
fn flat_response_fails_the_screen() {
    let data = QuantalDataset::new(&[0.0, 1.0, 2.0], &[5, 5, 5], &[50, 50, 50]).unwrap();
    assert!(matches!(
        analyze(&data, &small_config(&ModelId::ALL)),
        Err(Error::DataFailure { .. })
    ));
}

#[test]
fn cli_json_is_byte_identical_across_runs() {
    let run = || {
        let out = Command::new(BIN)
            .args([
                "analyze",
                &data_file("cumene.csv"),
                "--priors",
                &data_file("cumene_priors.json"),
            ])
            .args([
                "--models",
                "M3,M6",
                "--iterations",
                "5000",
                "--seed",
                "11",
                "--json",
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let a = run();
    assert_eq!(a, run());
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["models"].as_array().unwrap().len(), 2);
}

#[test]
fn cli_writes_report_file_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let out = Command::new(BIN)
        .args([
            "analyze",
            &data_file("cumene.csv"),
            "--models",
            "M3",
            "--iterations",
            "5000",
        ])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("M3") && table.contains("BMA"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["models"][0]["weight"].as_f64(), Some(1.0));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "dose,responders,n\n0,5,50\n1,5,50\n2,5,50\n").unwrap();
    let code = |args: &[&str]| Command::new(BIN).args(args).output().unwrap().status.code();
    assert_eq!(code(&["analyze", flat.to_str().unwrap()]), Some(3));
    assert_eq!(code(&["analyze", "/nonexistent/data.csv"]), Some(5));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["elicit", "beta", "0.6", "0.5"]), Some(1));
}

#[test]
fn cli_elicit_prints_hyperparameters() {
    let out = Command::new(BIN)
        .args(["elicit", "ig", "0.18", "0.5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.starts_with("inverse-gamma(0.534067, 0.128510)"),
        "{text}"
    );
    let out = Command::new(BIN)
        .args(["elicit", "beta", "0.04", "0.08"])
        .output()
        .unwrap();
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("beta(1.356029, 12.311779)"));
}
