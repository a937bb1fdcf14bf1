use std::io::Write;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

const TABLE1: &str = r#"{"n": 2, "N": 3, "a": ["1/3", "1/3", "1/3"], "beta": [0, "2/3", 1],
    "d": [0, 0, "1/2"], "depth": 12, "pos_count": 8}"#;
const TABLE2: &str = r#"{"n": 2, "N": 3, "a": ["1/3", "1/3", "1/3"], "beta": [0, -1, 0],
    "d": [0, 0, "1/2"], "depth": "auto", "neg_count": 4}"#;
const TABLE3: &str = r#"{"n": 2, "N": 3, "a": ["1/3", "1/3", "1/3"], "beta": [0, -1, 0],
    "d": [0, 0, "-1/2"], "depth": 16, "pos_count": 6, "neg_count": 7}"#;

fn config(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn selfsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfsim"))
        .args(args)
        .output()
        .unwrap()
}

fn with_config(cmd: &str, cfg: &NamedTempFile, extra: &[&str]) -> Output {
    let path = cfg.path().to_str().unwrap();
    let mut args = vec![cmd, "--config", path];
    args.extend_from_slice(extra);
    selfsim(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `(side, index, l, k, lambda, normalized)` rows of a solve CSV.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("side,index,l,k,lambda,normalized"));
    lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn field(rows: &[Vec<String>], index: &str, col: usize) -> f64 {
    rows.iter().find(|r| r[1] == index).unwrap()[col]
        .parse()
        .unwrap()
}

#[test]
fn analyze_reports_structure() {
    let out = with_config("analyze", &config(TABLE1), &[]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("zeta=2/3,1/3 Z+=2 Z-=0"), "{text}");
    assert!(
        text.contains("ratio=54 regime=sign-preserving period=2"),
        "{text}"
    );

    let text = stdout(&with_config("analyze", &config(TABLE3), &[]));
    assert!(text.contains("regime=alternating period=2"), "{text}");
    assert!(text.contains("ratio=2916"), "{text}");
    assert!(text.contains("neg_offset=1"), "{text}");
}

#[test]
fn invalid_parameters_exit_two() {
    let bad = r#"{"n": 2, "a": [0.3, 0.3, 0.3], "beta": [0, 1, 2], "d": [0, 0, 0.5]}"#;
    let out = with_config("analyze", &config(bad), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("SumNotOne"), "{}", stderr(&out));

    let two_scaled = r#"{"n": 2, "a": ["1/2", "1/2"], "beta": [0, 1], "d": [0.5, 0.5]}"#;
    let out = with_config("solve", &config(two_scaled), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("NotZeroOrder"));

    let out = with_config("solve", &config("{not json"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let out = selfsim(&["analyze", "--config", "/nonexistent/job.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_table_one() {
    let out = with_config("solve", &config(TABLE1), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 8);
    assert!((field(&rows, "1", 4) / 286.10 - 1.0).abs() < 1e-2);
    assert!((field(&rows, "7", 5) / 271.32 - 1.0).abs() < 5e-3);
    assert!((field(&rows, "7", 4) / 54f64.powi(3) / 271.32 - 1.0).abs() < 5e-3);
    assert_eq!(rows[6][2..4], ["1".to_string(), "3".to_string()]);
    assert!(stderr(&out).contains("depth=12"));
}

#[test]
fn solve_table_two_with_auto_depth() {
    let out = with_config("solve", &config(TABLE2), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[0] == "neg"));
    assert!((-field(&rows, "-1", 4) / 369.75 - 1.0).abs() < 1e-2);
    assert!((-field(&rows, "-4", 4) / 54f64.powi(3) / 157.20 - 1.0).abs() < 5e-3);
    assert!(stderr(&out).contains("converged=true"));
}

#[test]
fn solve_table_three_leaves_the_leading_negative_unnormalized() {
    let out = with_config("solve", &config(TABLE3), &[]);
    assert!(out.status.success());
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 13);
    let first_neg = rows.iter().find(|r| r[1] == "-1").unwrap();
    assert!(first_neg[2].is_empty() && first_neg[3].is_empty() && first_neg[5].is_empty());
    assert!(first_neg[4].parse::<f64>().unwrap() < 0.0);
    assert!((-field(&rows, "-6", 5) / 299.00 - 1.0).abs() < 5e-3);
    assert!((field(&rows, "5", 5) / 299.00 - 1.0).abs() < 5e-3);
}

#[test]
fn solve_is_deterministic() {
    let cfg = config(TABLE3);
    let a = with_config("solve", &cfg, &[]);
    let b = with_config("solve", &cfg, &[]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn degenerate_regime_needs_force() {
    let flat = r#"{"n": 2, "a": ["1/3", "1/3", "1/3"], "beta": [1, 1, 1], "d": [0, 0, 0.5],
        "depth": 6, "pos_count": 2}"#;
    let cfg = config(flat);
    let out = with_config("solve", &cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    let out = with_config("solve", &cfg, &["--force"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    assert!(rows.iter().all(|r| r[2].is_empty() && r[5].is_empty()));
}

#[test]
fn exhausted_spectrum_exits_four() {
    let out = with_config("solve", &config(TABLE1), &["--depth", "2", "--pos", "20"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("IndexBeyondSpectrum"));
}

#[test]
fn flags_override_the_config() {
    let out = with_config(
        "solve",
        &config(TABLE1),
        &["--pos", "3", "--depth", "9", "--format", "text"],
    );
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("depth=9 "), "{text}");
    assert_eq!(text.lines().count(), 2 + 3);
}

#[test]
fn output_file_from_config() {
    let target = tempfile::tempdir().unwrap();
    let path = target.path().join("spectrum.csv");
    let job = TABLE1.replace(
        "\"pos_count\": 8",
        &format!("\"pos_count\": 2, \"output\": {:?}", path.to_str().unwrap()),
    );
    let out = with_config("solve", &config(&job), &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let rows = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(rows.len(), 2);
}

#[test]
fn asympt_reports_limits() {
    let out = with_config("asympt", &config(TABLE3), &["--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("side,l,tau,residual,ratio,predicted,ratio_deviation,converged")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let tau: f64 = r[2].parse().unwrap();
        let expected = if r[1] == "1" { 299.00 } else { 13764.02 };
        assert!((tau / expected - 1.0).abs() < 5e-3, "{r:?}");
        assert_eq!(r[7], "true");
    }

    let out = with_config("asympt", &config(TABLE1), &["--pos", "4"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn reproduce_tables_pass() {
    for (id, rows) in [("1", 8), ("2", 4), ("3", 12)] {
        let out = selfsim(&["reproduce-table", id]);
        assert!(out.status.success(), "table {id}: {}", stdout(&out));
        let text = stdout(&out);
        let passed = text
            .lines()
            .filter(|l| l.starts_with("pos") || l.starts_with("neg"))
            .filter(|l| l.ends_with("PASS"))
            .count();
        assert_eq!(passed, rows, "{text}");
        assert!(!text.contains("FAIL"));
    }
    let out = selfsim(&["reproduce-table", "2", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(4));
    let out = selfsim(&["reproduce-table", "1", "--depth", "2", "--format", "csv"]);
    assert_ne!(out.status.code(), Some(0));
    let out = selfsim(&["reproduce-table", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_suites_pass() {
    for suite in ["oracle", "lemmas", "inertia", "equivalence"] {
        let out = selfsim(&["verify", suite, "--seed", "7"]);
        assert!(out.status.success(), "{suite}: {}", stdout(&out));
        assert!(
            stdout(&out).starts_with(&format!("PASS {suite}")),
            "{}",
            stdout(&out)
        );
    }
}
