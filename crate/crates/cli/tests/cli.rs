use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qualeval"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Writes a config equal to the bundled one apart from `extra`, appended at
/// top level before any table.
fn config_with(dir: &Path, extra: &str) -> PathBuf {
    let base = std::fs::read_to_string(configs().join("synthetic.toml")).unwrap();
    let path = dir.join("config.toml");
    std::fs::write(&path, format!("{extra}\n{base}")).unwrap();
    path
}

#[test]
fn synth_peaks_build_table_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = configs().join("synthetic.toml");
    ok(bin().arg("--config").arg(&cfg).arg("--out").arg(d).arg("synth").output().unwrap());
    let dataset = std::fs::read_to_string(d.join("dataset.csv")).unwrap();
    assert_eq!(dataset.lines().count(), 901);
    assert!(dataset.lines().next().unwrap().ends_with(",tier"));

    ok(bin()
        .arg("--out")
        .arg(d)
        .args(["peaks", "--window", "250,350", "--idle", "20,200"])
        .arg(d.join("seq1-run1.csv"))
        .arg(d.join("seq1-run2.csv"))
        .output()
        .unwrap());
    let peaks = std::fs::read_to_string(d.join("peaks.csv")).unwrap();
    let mut lines = peaks.lines();
    assert_eq!(lines.next(), Some("chromatogram,retention_time,height,snr,skewness,area"));
    for line in lines {
        let rt: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        // Apexes near 300 s, reported in minutes.
        assert!((rt - 5.0).abs() < 0.05, "{line}");
    }

    ok(bin()
        .arg("--out")
        .arg(d)
        .arg("build-table")
        .arg("--peaks")
        .arg(d.join("peaks.csv"))
        .arg("--pairs")
        .arg(configs().join("pairs.csv"))
        .output()
        .unwrap());
    let table = std::fs::read_to_string(d.join("table.csv")).unwrap();
    let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "seq1");
    let dtr: f64 = row[1].parse().unwrap();
    assert!(dtr < 0.0 && dtr > -0.02, "run2 elutes later: {dtr}");
    assert_eq!(row[7], "NA");
}

#[test]
fn run_is_byte_identical_and_report_rerenders() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = configs().join("synthetic.toml");
    for sub in ["a", "b"] {
        ok(bin()
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(d.join(sub))
            .args(["--seed", "11", "run"])
            .output()
            .unwrap());
    }
    let a = std::fs::read(d.join("a/report.json")).unwrap();
    let b = std::fs::read(d.join("b/report.json")).unwrap();
    assert_eq!(a, b);

    let out = ok(bin()
        .arg("--out")
        .arg(d.join("c"))
        .args(["--format", "csv,md", "report"])
        .arg(d.join("a/report.json"))
        .output()
        .unwrap());
    assert!(out.contains("metrics.csv") && out.contains("report.md"));
    assert!(!d.join("c/report.json").exists());
    assert_eq!(
        std::fs::read(d.join("a/metrics.csv")).unwrap(),
        std::fs::read(d.join("c/metrics.csv")).unwrap()
    );
}

#[test]
fn cluster_then_evaluate_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = std::fs::read_to_string(configs().join("synthetic.toml")).unwrap();
    let cfg = d.join("k4.toml");
    std::fs::write(&cfg, base.replace("k_max = 10", "k_max = 10\nk = 4")).unwrap();

    ok(bin().arg("--config").arg(&cfg).arg("--out").arg(d).arg("cluster").output().unwrap());
    let labels = std::fs::read_to_string(d.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().next(), Some("sequence_id,part,cluster"));
    let mut seen: Vec<&str> = labels.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen, ["0", "1", "2", "3"]);

    ok(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(d)
        .args(["--format", "csv", "evaluate", "--labels"])
        .arg(d.join("labels.csv"))
        .output()
        .unwrap());
    let metrics = std::fs::read_to_string(d.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next(), Some("cluster,rmse_test,r2_test"));
    assert_eq!(metrics.lines().count(), 5);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with(dir.path(), "colour = \"blue\"");
    let out = bin().arg("--config").arg(&cfg).arg("run").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn bad_window_is_a_usage_error() {
    let out = bin().args(["peaks", "x.csv", "--window", "5,1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
