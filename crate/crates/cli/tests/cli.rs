//! Black-box tests of the `lgi-sim` binary.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lgi-sim"));
    c.env_remove("LGI_SIM_SEED");
    c
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn lgi-sim");
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

struct CsvRow {
    tau_angle: f64,
    k3: f64,
    shots: u64,
    rule: String,
}

fn parse_csv(path: &Path) -> Vec<CsvRow> {
    let text = fs::read_to_string(path).expect("read csv");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tau_angle,c21,c32,c31,k3,stderr,shots,rule"
    );
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 8, "row: {l}");
            CsvRow {
                tau_angle: f[0].parse().unwrap(),
                k3: f[4].parse().unwrap(),
                shots: f[6].parse().unwrap(),
                rule: f[7].to_string(),
            }
        })
        .collect()
}

#[test]
fn violation_reports_sigma_level() {
    let out = run_ok(&[
        "violation", "--k3", "1.739", "--stderr", "0.014", "--bound", "1.5",
    ]);
    assert_eq!(stdout_of(&out).trim(), "17.07\u{3c3}");

    let out = run_ok(&["violation", "--k3", "1.5", "--stderr", "0.014"]);
    assert_eq!(stdout_of(&out).trim(), "0.00\u{3c3}");

    let out = bin()
        .args(["violation", "--k3", "1.7", "--stderr", "0", "--bound", "1.5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("standard error"));
}

#[test]
fn exact_vonneumann_sweep_peaks_at_the_right_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("vn");
    run_ok(&[
        "sweep",
        "--rule",
        "vonneumann",
        "--points",
        "31",
        "--exact",
        "--svg",
        "--out",
        out_dir.to_str().unwrap(),
    ]);

    let rows = parse_csv(&out_dir.join("sweep.csv"));
    assert_eq!(rows.len(), 31);
    assert!(rows.iter().all(|r| r.rule == "vonneumann" && r.shots == 0));

    let max_k3 = rows.iter().map(|r| r.k3).fold(f64::MIN, f64::max);
    assert!((max_k3 - 1.7565).abs() < 0.01, "31-grid max {max_k3}");
    // the grid point nearest 1.585 pi is 1.6 pi; it must attain the maximum
    // (its mirror at 0.4 pi ties with it)
    let target = 1.6 * PI;
    let hit = rows
        .iter()
        .filter(|r| r.k3 >= max_k3 - 1e-9)
        .any(|r| (r.tau_angle - target).abs() < 1e-9);
    assert!(hit, "no maximal row at 1.6 pi");

    let svg = fs::read_to_string(out_dir.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
    assert!(svg.contains("classical bound"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["config"]["rule"], "vonneumann");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    // byte-identical rerun of CSV and JSON
    let out_dir2 = dir.path().join("vn2");
    run_ok(&[
        "sweep",
        "--rule",
        "vonneumann",
        "--points",
        "31",
        "--exact",
        "--svg",
        "--out",
        out_dir2.to_str().unwrap(),
    ]);
    assert_eq!(
        fs::read(out_dir.join("sweep.csv")).unwrap(),
        fs::read(out_dir2.join("sweep.csv")).unwrap()
    );
    assert_eq!(
        fs::read(out_dir.join("sweep.json")).unwrap(),
        fs::read(out_dir2.join("sweep.json")).unwrap()
    );
    assert_eq!(
        fs::read(out_dir.join("sweep.svg")).unwrap(),
        fs::read(out_dir2.join("sweep.svg")).unwrap()
    );
}

#[test]
fn exact_luders_sweep_respects_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("l");
    run_ok(&[
        "sweep",
        "--rule",
        "luders",
        "--points",
        "31",
        "--exact",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let rows = parse_csv(&out_dir.join("sweep.csv"));
    assert!(rows.iter().all(|r| r.k3 <= 1.5 + 1e-9));
}

#[test]
fn single_point_sweep_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("one");
    run_ok(&[
        "sweep",
        "--rule",
        "luders",
        "--points",
        "1",
        "--range",
        "0:0",
        "--exact",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let rows = parse_csv(&out_dir.join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    assert!((rows[0].k3 - 1.0).abs() <= 1e-10);
}

#[test]
fn monte_carlo_sweep_is_reproducible_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, jobs) in [(&a, "1"), (&b, "2")] {
        run_ok(&[
            "sweep",
            "--rule",
            "vonneumann",
            "--points",
            "3",
            "--range",
            "0:1.6pi",
            "--shots",
            "2000",
            "--seed",
            "7",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        fs::read(a.join("sweep.csv")).unwrap(),
        fs::read(b.join("sweep.csv")).unwrap()
    );
    let rows = parse_csv(&a.join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.shots == 2000));
}

#[test]
fn seed_env_var_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("env");
    let b = dir.path().join("flag");
    let common = [
        "sweep", "--rule", "luders", "--points", "2", "--range", "0:pi", "--shots", "500",
    ];
    let out = bin()
        .args(common)
        .args(["--out", a.to_str().unwrap()])
        .env("LGI_SIM_SEED", "99")
        .output()
        .unwrap();
    assert!(out.status.success());
    run_ok(
        &[
            &common[..],
            &["--seed", "99", "--out", b.to_str().unwrap()],
        ]
        .concat(),
    );
    assert_eq!(
        fs::read(a.join("sweep.csv")).unwrap(),
        fs::read(b.join("sweep.csv")).unwrap()
    );
}

#[test]
fn config_file_drives_a_sweep_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    let out_dir = dir.path().join("cfg-out");
    fs::write(
        &cfg_path,
        serde_json::json!({
            "rule": "vonneumann",
            "points": 5,
            "range": "0:2pi",
            "exact": true,
            "out": out_dir.to_str().unwrap(),
        })
        .to_string(),
    )
    .unwrap();
    run_ok(&["sweep", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(parse_csv(&out_dir.join("sweep.csv")).len(), 5);

    // flag wins over file
    run_ok(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--points",
        "2",
    ]);
    assert_eq!(parse_csv(&out_dir.join("sweep.csv")).len(), 2);
}

#[test]
fn malformed_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    fs::write(&cfg_path, "{ not json").unwrap();
    let out = bin()
        .args(["sweep", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("parsing config"));

    // unknown field is rejected too
    fs::write(&cfg_path, r#"{"rule": "luders", "bogus": 1}"#).unwrap();
    let out = bin()
        .args(["sweep", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());

    // exact conflicts with shots
    let out = bin()
        .args(["sweep", "--rule", "luders", "--exact", "--shots", "10"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn compile_epsilon_pi_yields_three_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pi.txt");
    let out = run_ok(&["compile", "--epsilon", "pi", "--out", path.to_str().unwrap()]);
    assert!(stdout_of(&out).contains("compiled 3 pulses"));

    let parsed = lgi_core::parse_pulse_file(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(parsed.pulses.len(), 3);
    let flip = lgi_core::precession_unitary(PI);
    let residual = parsed
        .product()
        .max_abs_diff(&lgi_core::embed4(&flip).unwrap())
        .unwrap();
    assert!(residual <= 1e-10);

    assert!(dir.path().join("pi.manifest.json").exists());
}

#[test]
fn compile_generic_epsilon_yields_seven_legal_pulses() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e1.txt");
    let out = run_ok(&["compile", "--epsilon", "1.0", "--out", path.to_str().unwrap()]);
    let stdout = stdout_of(&out);
    assert!(stdout.contains("compiled 7 pulses"), "stdout: {stdout}");

    let parsed = lgi_core::parse_pulse_file(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(parsed.pulses.len(), 7);
    let graph = lgi_core::CouplingGraph::default();
    assert!(parsed.pulses.iter().all(|p| graph.is_allowed(p.pair)));
    let residual = parsed
        .product()
        .max_abs_diff(&lgi_core::embed4(&lgi_core::precession_unitary(1.0)).unwrap())
        .unwrap();
    assert!(residual <= 1e-10);
}

#[test]
fn compile_zero_epsilon_yields_empty_program() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.txt");
    let out = run_ok(&["compile", "--epsilon", "0", "--out", path.to_str().unwrap()]);
    assert!(stdout_of(&out).contains("compiled 0 pulses"));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1, "header only");
}

#[test]
fn compile_accepts_matrix_files_and_rejects_nonunitary_ones() {
    let dir = tempfile::tempdir().unwrap();
    let target = lgi_core::precession_unitary(0.9);
    let mut text = String::from("# row-major re im pairs\n");
    for r in 0..3 {
        for c in 0..3 {
            let z = target.get(r, c);
            text.push_str(&format!("{:.17e} {:.17e}\n", z.re, z.im));
        }
    }
    let mat_path = dir.path().join("u.mat");
    fs::write(&mat_path, &text).unwrap();
    let pulse_path = dir.path().join("u.txt");
    run_ok(&[
        "compile",
        "--matrix",
        mat_path.to_str().unwrap(),
        "--out",
        pulse_path.to_str().unwrap(),
    ]);
    let parsed = lgi_core::parse_pulse_file(&fs::read_to_string(&pulse_path).unwrap()).unwrap();
    let residual = parsed
        .product()
        .max_abs_diff(&lgi_core::embed4(&target).unwrap())
        .unwrap();
    assert!(residual <= 1e-10);

    // checksum in the file matches the target actually compiled
    assert_eq!(parsed.target_sha256, lgi_core::target_checksum(&target));

    let bad_path = dir.path().join("bad.mat");
    fs::write(&bad_path, "1 0 0 0 0 0\n0 0 2 0 0 0\n0 0 0 0 1 0\n").unwrap();
    let out = bin()
        .args([
            "compile",
            "--matrix",
            bad_path.to_str().unwrap(),
            "--out",
            dir.path().join("bad.txt").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not unitary"));

    // neither source is an error
    let out = bin().args(["compile"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn custom_rabi_scales_durations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    run_ok(&[
        "compile",
        "--epsilon",
        "pi",
        "--rabi",
        "16000",
        "--out",
        path.to_str().unwrap(),
    ]);
    let parsed = lgi_core::parse_pulse_file(&fs::read_to_string(&path).unwrap()).unwrap();
    let expected_rabi = 2.0 * PI * 16_000.0;
    assert!((parsed.rabi_rad_per_s - expected_rabi).abs() / expected_rabi < 1e-12);
    for p in &parsed.pulses {
        assert!((p.duration - p.theta / expected_rabi).abs() <= 1e-18);
    }
}
