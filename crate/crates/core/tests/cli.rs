use std::path::{Path, PathBuf};
use std::process::Command;

use tbkit::cli::{run_cli, ExperimentConfig};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn golden_configs() -> Vec<PathBuf> {
    let mut v: Vec<_> = std::fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".config.json"))
        .collect();
    v.sort();
    v
}

fn stem(p: &Path) -> String {
    p.file_name().unwrap().to_string_lossy().trim_end_matches(".config.json").to_string()
}

/// Set `TBKIT_BLESS=1` to rewrite the stored reports.
#[test]
fn golden_reports_reproduce_byte_for_byte() {
    let bless = std::env::var("TBKIT_BLESS").is_ok();
    let configs = golden_configs();
    assert!(configs.len() >= 6);
    for cfg in configs {
        let sub = ExperimentConfig::load(&cfg).unwrap().subcommand();
        let out = tempfile::tempdir().unwrap();
        let (code, summary) = run_cli(sub, &cfg, out.path());
        assert!(code < 2, "{}: {summary}", cfg.display());
        for ext in ["json", "csv"] {
            let got = std::fs::read(out.path().join(format!("{sub}.{ext}"))).unwrap();
            let stored = golden_dir().join(format!("{}.{ext}", stem(&cfg)));
            if bless {
                std::fs::write(&stored, &got).unwrap();
            }
            let want = std::fs::read(&stored).unwrap_or_else(|_| panic!("missing {}", stored.display()));
            assert!(got == want, "{} differs from the stored report", stored.display());
        }
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_tbkit");
    let out = tempfile::tempdir().unwrap();
    let run = |sub: &str, cfg: &Path| {
        Command::new(bin).arg(sub).arg("--config").arg(cfg).arg("--out").arg(out.path()).output().unwrap()
    };
    let ok = run("check-system", &golden_dir().join("check-system-alternating.config.json"));
    assert_eq!(ok.status.code(), Some(0));
    let failed = run("check-system", &golden_dir().join("check-system-noncompatible.config.json"));
    assert_eq!(failed.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("check-system.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["compat_witness"]["cube"], serde_json::json!([0, 0]));
    assert_eq!(report["result"]["compat_witness"]["product_integral_exact"], "1/12");

    let mismatch = run("sqfn", &golden_dir().join("check-system-alternating.config.json"));
    assert_eq!(mismatch.status.code(), Some(2));

    let bad = out.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"schema_version": 1, "subcommand": "sqfn",
            "kernel": {"kind": "gaussian_product", "m": 2, "n": 1, "decay": 2.0, "holder": 1.0, "constant": 1.0},
            "index": {"p": 2.0, "slots": [2.0, 2.0]},
            "inputs": [{"kind": "gaussian", "center": [0.0], "width": 1.0}, {"kind": "gaussian", "center": [0.0], "width": 1.0}],
            "window": {"h": 0.125, "bounds": [[-8.0, 8.0]]},
            "scales": {"t_min": 0.5, "t_max": 2.0, "per_octave": 2}}"#,
    )
    .unwrap();
    let invalid = run("sqfn", &bad);
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("index"));

    let usage = Command::new(bin).arg("sqfn").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn schema_covers_every_golden_field() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/config.schema.json")).unwrap())
            .unwrap();
    let variants = schema["oneOf"].as_array().unwrap();
    assert_eq!(variants.len(), 6);
    for cfg in golden_configs() {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
        let sub = &v["subcommand"];
        let props = variants.iter().find(|s| &s["properties"]["subcommand"]["const"] == sub).unwrap()["properties"]
            .as_object()
            .unwrap();
        for key in v.as_object().unwrap().keys() {
            assert!(props.contains_key(key), "{}: '{key}' not in schema", cfg.display());
        }
    }
}
