//! End-to-end tests of the binary: exit codes, artifact layout, published
//! p-value reproduction, and byte-level determinism of a full run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qqfit"))
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qqfit-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut map = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        map.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    map
}

#[test]
fn battery_reproduces_published_statistic_and_p_value() {
    let out_dir = tmp_dir("battery");
    let out = run(&[
        "test",
        "--input",
        &fixture("liability.csv"),
        "--transform",
        "log",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
            .unwrap();
    assert_eq!(json[0]["dataset"], "liability");
    assert_eq!(json[0]["n"], 14);
    let tests = json[0]["tests"].as_array().unwrap();
    assert_eq!(tests.len(), 3);

    // the fixture was built to land exactly on the published statistic
    let t = tests[0]["statistic"].as_f64().unwrap();
    assert!((t - 3.9443).abs() < 1e-4, "T = {t}");
    let p = tests[0]["p_value"].as_f64().unwrap();
    assert!((p - 0.6496).abs() <= 0.01, "p = {p}");
    assert_eq!(tests[0]["p_method"], "normal-approx");
    // comparison tests carry simulated p-values
    assert_eq!(tests[1]["p_method"], "monte-carlo");
    assert_eq!(tests[2]["p_method"], "monte-carlo");

    // artifacts
    assert!(out_dir.join("results.txt").exists());
    assert!(out_dir.join("results.csv").exists());
    let svg = std::fs::read_to_string(out_dir.join("liability-qq.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 14);
    assert_eq!(svg.matches("<line").count(), 1);

    // estimates on stdout
    let text = stdout(&out);
    assert!(text.contains("mu_hat"), "{text}");
    assert!(text.contains("VaR[0.5%]"));

    let _ = std::fs::remove_dir_all(&out_dir);
}

#[test]
fn full_run_is_byte_identical_for_fixed_seed() {
    let dir_a = tmp_dir("det-a");
    let dir_b = tmp_dir("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "test",
            "--input",
            &fixture("two_lines.csv"),
            "--transform",
            "log",
            "--p-method",
            "mc",
            "--reps",
            "20000",
            "--seed",
            "13",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    let a = read_dir_bytes(&dir_a);
    let b = read_dir_bytes(&dir_b);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        vec![
            "liability-qq.svg",
            "ratios-qq.svg",
            "results.csv",
            "results.json",
            "results.txt"
        ]
    );
    let identical = a == b;
    println!(
        "ACCEPTANCE 7d end-to-end determinism: {} ({} artifacts byte-compared)",
        if identical { "PASS" } else { "FAIL" },
        a.len()
    );
    assert!(identical);
    let _ = std::fs::remove_dir_all(&dir_a);
    let _ = std::fs::remove_dir_all(&dir_b);
}

#[test]
fn synthetic_lognormal_fixture_passes_battery() {
    let out_dir = tmp_dir("lognormal");
    let out = run(&[
        "test",
        "--input",
        &fixture("combined_ratios.csv"),
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for name in [
        "results.txt",
        "results.csv",
        "results.json",
        "ratios-qq.svg",
    ] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("results.json")).unwrap())
            .unwrap();
    assert_eq!(json[0]["n"], 18);
    // the fixture is genuinely lognormal: no test should reject at 5%
    for test in json[0]["tests"].as_array().unwrap() {
        let p = test["p_value"].as_f64().unwrap();
        assert!(p > 0.05, "{} rejected: p = {p}", test["name"]);
    }
    let _ = std::fs::remove_dir_all(&out_dir);
}

#[test]
fn published_statistics_mode_maps_p_values() {
    let out = run(&["test", "--statistic", "3.9443", "--sample-size", "14"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("3.9443"));
    assert!(text.contains("65.03%"), "{text}"); // Phi((T-mu)/sigma)
    assert!(text.contains("at alpha = 0.05: accept"));

    let out = run(&["test", "--statistic", "2.1064", "--sample-size", "18"]);
    let text = stdout(&out);
    assert!(text.contains("0.10%"), "{text}");
    assert!(text.contains("at alpha = 0.01: reject"));
}

#[test]
fn log_transform_rejects_nonpositive_values_with_exit_2() {
    let out = run(&["test", "--input", &fixture("with_zero.csv")]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("ratios") && msg.contains("positive"), "{msg}");

    // identity transform accepts the same file (n=4 too small for approx
    // p-values though, so ask for mc)
    let out = run(&[
        "test",
        "--input",
        &fixture("with_zero.csv"),
        "--transform",
        "identity",
        "--p-method",
        "mc",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
}

#[test]
fn malformed_csv_reports_line_and_exits_2() {
    let out = run(&["test", "--input", &fixture("bad.csv")]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("line 3") && msg.contains("oops"), "{msg}");
}

#[test]
fn missing_input_file_exits_2() {
    let out = run(&["test", "--input", "/nonexistent/nope.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn small_sample_needs_mc_p_values() {
    // n = 4 with the default normal approximation is refused
    let out = run(&[
        "test",
        "--input",
        &fixture("with_zero.csv"),
        "--transform",
        "identity",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("use Monte Carlo"), "{}", stderr(&out));
}

#[test]
fn calibrate_writes_tables_and_enforces_reps_floor() {
    let out = run(&[
        "calibrate",
        "--n-range",
        "10..11",
        "--reps",
        "1000",
        "--out",
        "/tmp/x",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("floor"));

    let out_dir = tmp_dir("calib");
    let out = run(&[
        "calibrate",
        "--n-range",
        "10..12",
        "--reps",
        "10000",
        "--seed",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let csv = std::fs::read_to_string(out_dir.join("calibration.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4); // header + 3 sizes
    assert_eq!(lines[0], "n,reps,seed,mu,sigma,q01,q05,q10");
    for n in 10..=12 {
        assert!(out_dir.join(format!("calibration-n{n}.json")).exists());
        assert!(out_dir.join(format!("calibration-n{n}.svg")).exists());
    }
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("calibration-n10.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["n"], 10);
    assert_eq!(json["reps"], 10000);
    let mu = json["mu"].as_f64().unwrap();
    assert!((mu - 3.5221).abs() < 0.02, "mu = {mu}");

    // the same invocation writes identical bytes
    let again = tmp_dir("calib2");
    let out = run(&[
        "calibrate",
        "--n-range",
        "10..12",
        "--reps",
        "10000",
        "--seed",
        "5",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(read_dir_bytes(&out_dir), read_dir_bytes(&again));
    let _ = std::fs::remove_dir_all(&out_dir);
    let _ = std::fs::remove_dir_all(&again);
}

#[test]
fn power_writes_rows_and_validates_alphas() {
    let out = run(&[
        "power",
        "--test",
        "correlation",
        "--alternative",
        "gumbel",
        "--n",
        "20",
        "--alphas",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2)); // usage error from clap

    let out_dir = tmp_dir("power");
    let out = run(&[
        "power",
        "--test",
        "correlation",
        "--alternative",
        "gumbel",
        "--n",
        "20",
        "--alphas",
        "0.01,0.05,0.1",
        "--reps",
        "10000",
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let csv = std::fs::read_to_string(out_dir.join("power-correlation_t-gumbel-n20.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "test,alternative,n,alpha,critical_value,beta,reps,seed"
    );
    // beta column decreases with alpha
    let beta = |line: &str| -> f64 { line.split(',').nth(5).unwrap().parse().unwrap() };
    assert!(beta(lines[1]) > beta(lines[2]) && beta(lines[2]) > beta(lines[3]));

    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("power-correlation_t-gumbel-n20.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
    assert_eq!(json[0]["test"], "correlation_t");
    assert_eq!(json[0]["alternative"], "gumbel");
    assert_eq!(json[0]["alpha"], 0.01);
    let _ = std::fs::remove_dir_all(&out_dir);
}

#[test]
fn plot_renders_svg_per_dataset() {
    let out_dir = tmp_dir("plot");
    let out = run(&[
        "plot",
        "--input",
        &fixture("two_lines.csv"),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for name in ["ratios-qq.svg", "liability-qq.svg"] {
        let svg = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<line").count(), 1);
    }
    let _ = std::fs::remove_dir_all(&out_dir);
}

#[test]
fn column_selection_and_semicolon_autodetection() {
    let out = run(&[
        "test",
        "--input",
        &fixture("two_lines.csv"),
        "--column",
        "liability",
        "--seed",
        "7",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("liability"));
    assert!(!text.contains("ratios"), "{text}");
    assert!(text.contains("3.9443"), "{text}");

    let out = run(&[
        "test",
        "--input",
        &fixture("two_lines.csv"),
        "--column",
        "nope",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("available"), "{}", stderr(&out));
}
