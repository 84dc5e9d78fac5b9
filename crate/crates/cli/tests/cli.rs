use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tamed_sde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tamed-sde"))
        .args(args)
        .output()
        .expect("spawn tamed-sde")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let o = tamed_sde(&[
        "simulate", "--model", "cubic-additive", "--n-values", "4", "--seed", "1", "--output",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got = fs::read_to_string(&out).unwrap();
    let golden = include_str!("golden/simulate_cubic_n4_seed1.csv");
    assert_eq!(got, golden);
}

#[test]
fn simulate_zero_model_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero.csv");
    let o = tamed_sde(&[
        "simulate", "--model", "zero", "--param", "x0=1.5", "--n-values", "8", "--output",
        path_arg(&out),
    ]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "x1", "finite"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 9);
    for r in &rows {
        assert_eq!(r[1].parse::<f64>().unwrap(), 1.5);
        assert_eq!(&r[2], "true");
    }
    assert_eq!(rows[8][0].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn same_seed_same_bytes_and_manifest_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let o = tamed_sde(&[
            "moments", "--paths", "200", "--n-values", "8,16", "--seed", "7", "--output",
            path_arg(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(&out).unwrap());
        let manifest = fs::read_to_string(dir.path().join(format!("{name}.manifest"))).unwrap();
        assert!(manifest.contains("master_seed = 7"), "{manifest}");
        assert!(manifest.contains("command = moments"));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn convergence_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    let o = tamed_sde(&[
        "convergence", "--model", "gbm", "--paths", "100", "--n-values", "4,8,16", "--fine-n", "64",
        "--output", path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["n", "error", "std_error", "p", "M", "scheme", "alpha", "model"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][4], "100");
    assert_eq!(&rows[0][5], "tamed");
    assert_eq!(&rows[0][7], "gbm");
    assert!(String::from_utf8_lossy(&o.stdout).contains("rate"));
}

#[test]
fn bad_config_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "model = \"cubic-additive\"\npaths = 100\nalpha = 0.9\n").unwrap();
    let o = tamed_sde(&["convergence", "--config", path_arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("exp.toml:3"), "{err}");
    assert!(err.contains("0.9"), "{err}");
}

#[test]
fn flag_error_names_the_flag() {
    let o = tamed_sde(&["moments", "--n-values", "64,8", "--paths", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--n-values"));
}

#[test]
fn divergent_estimate_fails_but_keeps_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("div.csv");
    let o = tamed_sde(&[
        "convergence", "--scheme", "euler", "--param", "c=0", "--param", "x0=5", "--n-values",
        "4,8,16", "--fine-n", "64", "--paths", "20", "--output", path_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.records().count(), 3);
    let manifest = fs::read_to_string(dir.path().join("div.csv.manifest")).unwrap();
    assert!(manifest.contains("valid = false"), "{manifest}");
}

#[test]
fn output_dir_env_sets_default_location() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tamed-sde"))
        .args(["diverge-demo", "--paths", "50", "--n-values", "4,8"])
        .env("TAMED_SDE_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("diverge-demo.csv").exists());
}
