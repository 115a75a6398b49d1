use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CHEAP_BELTRAMI: &str = r#"{"n":16,"horizon":0.05,"snapshot_stride":10}"#;

fn besovlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_besovlab"))
        .args(args)
        .env_remove("BESOVLAB_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn cheap_run(root: &Path) -> Output {
    let cfg = root.join("cfg.json");
    fs::write(&cfg, CHEAP_BELTRAMI).unwrap();
    let out = root.join("out");
    besovlab(&[
        "run",
        "--experiment",
        "beltrami_oracle",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn list_names_every_experiment() {
    let o = besovlab(&["list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 10);
    for name in ["partition_of_unity", "beltrami_oracle", "reynolds_decay", "stability", "inequality_ratios"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn passing_run_exits_zero_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = besovlab(&["run", "--experiment", "partition_of_unity", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("PASS")));
    assert!(!stdout.contains("FAIL"));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("partition_of_unity/report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = besovlab(&["run", "--experiment", "no_such_thing", "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("besovlab: error kind=config"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"n":16,"unknown_field":1}"#).unwrap();
    let o = besovlab(&["run", "--experiment", "beltrami_oracle", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    fs::write(&bad, "{not json").unwrap();
    let o = besovlab(&["run", "--experiment", "beltrami_oracle", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code(&o), 2);

    let o = besovlab(&["run", "--experiment", "beltrami_oracle", "--n", "17", "--out", out]);
    assert_eq!(code(&o), 2);

    let o = besovlab(&["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("kind=usage"));
}

#[test]
fn blow_up_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("big.json");
    fs::write(&cfg, r#"{"n":16,"horizon":0.05,"amplitude":1e300}"#).unwrap();
    let o = besovlab(&[
        "run",
        "--experiment",
        "beltrami_oracle",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("kind=numerical"));
}

#[test]
fn replay_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let o = cheap_run(dir.path());
    // The short run cannot show the step-halving gain, so acceptance fails;
    // the artifacts are still complete.
    assert!(code(&o) == 0 || code(&o) == 1);
    let report = dir.path().join("out/beltrami_oracle/report.json");
    let r = report.to_str().unwrap();
    let o = besovlab(&["replay", r]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("byte for byte"));

    let snap = dir.path().join("out/beltrami_oracle/snapshots/base/snap_00001.blab");
    let mut bytes = fs::read(&snap).unwrap();
    bytes[40] ^= 0x10;
    fs::write(&snap, bytes).unwrap();
    let o = besovlab(&["replay", "--verify-only", r]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("checksum mismatch"));
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cheap_run(a.path());
    cheap_run(b.path());
    let read = |d: &Path| fs::read(d.join("out/beltrami_oracle/report.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let snap = "out/beltrami_oracle/snapshots/base/snap_00003.blab";
    assert_eq!(fs::read(a.path().join(snap)).unwrap(), fs::read(b.path().join(snap)).unwrap());
}

#[test]
fn environment_overrides_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let env_root = dir.path().join("from_env");
    let flag_root = dir.path().join("from_flag");
    let o = Command::new(env!("CARGO_BIN_EXE_besovlab"))
        .args(["run", "--experiment", "partition_of_unity", "--out", flag_root.to_str().unwrap()])
        .env("BESOVLAB_OUT", &env_root)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_root.join("partition_of_unity/report.json").exists());
    assert!(!flag_root.exists());
}
