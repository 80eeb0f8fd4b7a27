use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gapdelay(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapdelay"))
        .args(args)
        .env_remove("GAPDELAY_OUT_DIR")
        .current_dir(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn scenarios_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapdelay(&["scenarios"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 11);
    let o = gapdelay(&["scenarios", "--json", "A2", "A2*"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[1]["reference_of"], "A2");
}

#[test]
fn unknown_scenario_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapdelay(&["scenarios", "Z9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Z9"));
    let o = gapdelay(&["mask", "--scenario", "Z9", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    fs::write(&cfg, r#"{"snr_grid_db": []}"#).unwrap();
    let o = gapdelay(&["crlb", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SNR grid is empty"));
    for args in [
        vec!["crlb", "--dtau-grid", "3,2"],
        vec!["mask", "--preset", "triangular"],
        vec!["scan", "--axis", "0:50"],
        vec!["frobnicate"],
    ] {
        assert_eq!(gapdelay(&args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn silent_dominant_path_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.json");
    fs::write(
        &cfg,
        r#"{"scenarios": ["A1"], "channel": {"tau1_ns": 5, "tau2_ns": 15,
            "alpha1_re": 0, "alpha1_im": 0, "alpha2_re": 0.35, "alpha2_im": 0.6}}"#,
    )
    .unwrap();
    let o = gapdelay(&["crlb", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn overlapping_windows_warn() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapdelay(
        &[
            "scan",
            "--scenario",
            "A1",
            "--tau1-ns",
            "10",
            "--tau2-ns",
            "20",
            "--window-ns",
            "6",
            "--axis",
            "0:40:0.01",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("overlap"));
    let o = gapdelay(
        &["scan", "--scenario", "A1", "--axis", "0:40:0.01", "--out", "o"],
        dir.path(),
    );
    assert!(!stderr(&o).contains("overlap"));
    assert!(stdout(&o).contains("A1"));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"group": "B", "snr_grid_db": [0, 10, 20], "out_dir": "from_config"}"#,
    )
    .unwrap();
    let o = gapdelay(
        &[
            "crlb",
            "--config",
            cfg.to_str().unwrap(),
            "--scenario",
            "B2",
            "--dtau",
            "2",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        listing(&dir.path().join("from_config")),
        ["crlb_snr_dtau2ns_B2.csv", "crlb_snr_dtau2ns_B2_ref.csv"]
    );
    let text = fs::read_to_string(dir.path().join("from_config/crlb_snr_dtau2ns_B2.csv")).unwrap();
    assert!(text.contains("tau1=5 ns tau2=7 ns"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gapdelay"))
        .args(["mask", "--scenario", "A2"])
        .env("GAPDELAY_OUT_DIR", dir.path().join("env_out"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(listing(&dir.path().join("env_out")), ["mask_A2.csv", "mask_A2_ref.csv"]);
    let o = gapdelay(&["mask", "--scenario", "A1"], dir.path());
    assert!(o.status.success());
    assert_eq!(listing(&dir.path().join("out")), ["mask_A1.csv"]);
}

#[test]
fn no_meta_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "response",
            "--group",
            "a",
            "--axis",
            "0:20:0.01",
            "--check-recombination",
            "--no-meta",
            "--out",
            out,
        ]
    };
    let o = gapdelay(&args("r1"), dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("wrote ")).count(), 5);
    assert_eq!(text.lines().filter(|l| l.starts_with("recombination ")).count(), 2);
    gapdelay(&args("r2"), dir.path());
    for name in listing(&dir.path().join("r1")) {
        let a = fs::read(dir.path().join("r1").join(&name)).unwrap();
        let b = fs::read(dir.path().join("r2").join(&name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn leakage_output_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = gapdelay(
        &[
            "leakage",
            "--scenario",
            "A2",
            "--dtau-grid",
            "0.5,1,2,4,8",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("o/leakage_A2.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("dtau_ns,sqrt_crlb_ns,leakage"));
    let d: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(d, [0.5, 1.0, 2.0, 4.0, 8.0]);
}
