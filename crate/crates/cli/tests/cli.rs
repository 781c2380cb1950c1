use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qgraph(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgraph")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn field(r: &csv::StringRecord, i: usize) -> f64 {
    r[i].parse().unwrap()
}

#[test]
fn interval_spectrum_is_sturmian() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgraph(&["spectrum", "bundled:interval", "--count", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&dir.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        let n = (i + 1) as f64;
        assert!((field(r, 2) - (n * PI).powi(2)).abs() <= 1e-10 * n * n * PI * PI);
        assert_eq!(&r[5], i.to_string().as_str());
        assert_eq!(&r[7], "0");
    }
}

#[test]
fn graph_files_are_read_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let status =
        Command::new(env!("CARGO_BIN_EXE_qgraph")).args(["examples", "--out"]).arg(dir.path()).status().unwrap();
    assert!(status.success());
    let lasso = dir.path().join("lasso.graph");
    let out = qgraph(&["spectrum", lasso.to_str().unwrap(), "--count", "5"], dir.path());
    assert!(out.status.success());
    assert_eq!(rows(&dir.path().join("spectrum.csv")).len(), 5);
}

#[test]
fn malformed_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.graph");
    fs::write(&bad, "vertex 0 neumann\nvertex 1 dirichlet\nedge 0 0 1 length zero\n").unwrap();
    let out = qgraph(&["spectrum", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = qgraph(&["verify", "bundled:lasso", "--n-from", "5", "--n-to", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = qgraph(&["verify", "bundled:lasso", "--tol-grad", "-1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = qgraph(&["spectrum", "bundled:nonesuch"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lasso_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgraph(&["verify", "bundled:lasso", "--n-from", "2", "--n-to", "10", "--minimax"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = rows(&dir.path().join("morse_report.csv"));
    assert_eq!(report.len(), 9);
    for r in &report {
        match &r[8] {
            "pass" => assert_eq!(&r[4], &r[6]),
            "skipped_improper" => assert!(r[4].is_empty()),
            other => panic!("unexpected verdict {other}"),
        }
    }
    assert!(rows(&dir.path().join("minimax.csv")).iter().all(|r| &r[8] == "1"));
}

#[test]
fn scan_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qgraph(&["scan", "bundled:lasso"], dir.path()).status.success());
    let lasso = rows(&dir.path().join("lambda_scan.csv"));
    assert_eq!(lasso.len(), 256);
    assert!(lasso.iter().all(|r| r.len() == 3));

    assert!(qgraph(&["scan", "bundled:figure_eight", "--grid", "12"], dir.path()).status.success());
    let eight = rows(&dir.path().join("lambda_scan.csv"));
    assert_eq!(eight.len(), 144);
    assert!(eight.iter().all(|r| r.len() == 4));

    let out = qgraph(&["scan", "bundled:interval"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn histogram_matches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgraph(&["histogram", "bundled:figure_eight", "--n-to", "20", "--format", "tsv"], dir.path());
    assert!(out.status.success());
    let mut reader =
        csv::ReaderBuilder::new().delimiter(b'\t').from_path(dir.path().join("deficiency_hist.tsv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let reference: Vec<f64> = rows.iter().map(|r| field(r, 3)).collect();
    assert_eq!(reference, vec![0.25, 0.5, 0.25]);
    let freq: f64 = rows.iter().map(|r| field(r, 2)).sum();
    assert!((freq - 1.0).abs() < 1e-12);
}

#[test]
fn interlacing_reports_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgraph(&["interlace", "bundled:lasso", "--count", "10"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(", 0 violations"));
}

#[test]
fn critical_points_on_the_lasso_are_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let out = qgraph(&["critical", "bundled:lasso", "--grid", "8"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let found = rows(&dir.path().join("critical_points.csv"));
    assert!(!found.is_empty());
    for r in found.iter().filter(|r| &r[4] == "1") {
        assert!(!r[6].is_empty(), "bipartite critical point off the spectrum: {r:?}");
        assert!(field(r, 5) < 1e-8);
    }
}

#[test]
fn output_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert!(qgraph(&["verify", "bundled:figure_eight", "--n-to", "6"], dir.path()).status.success());
        assert!(qgraph(&["spectrum", "bundled:star3_long", "--count", "10"], dir.path()).status.success());
    }
    for name in ["morse_report.csv", "spectrum.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}
