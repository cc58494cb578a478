use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use owcluster::datasets::{gaussian_blobs, BlobSpec};
use owcluster::io::{write_csv, write_owcl};
use serde_json::Value;

fn owcluster(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_owcluster")).args(args).output().unwrap()
}

fn blobs_file(dir: &Path, centers: usize, seed: u64) -> PathBuf {
    let (x, labels) = gaussian_blobs(&BlobSpec::new(300, 16, centers, 10.0, 1.0, seed));
    let path = dir.join(format!("blobs{centers}.owcl"));
    write_owcl(&path, &x, Some(&labels)).unwrap();
    path
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn fixed_k_pipeline_recovers_blobs() {
    let dir = tempfile::tempdir().unwrap();
    let input = blobs_file(dir.path(), 4, 1);
    let report = json(&owcluster(&["pipeline", "--input", input.to_str().unwrap(), "--k", "4", "--n-init", "10"]));
    assert_eq!(report["chosen_k"], 4);
    assert_eq!(report["external"]["acc"], 100.0);
    assert_eq!(report["assignment"].as_array().unwrap().len(), 300);
    assert!(report["internal"]["silhouette"].as_f64().unwrap() > 0.5);
}

#[test]
fn range_pipeline_estimates_k() {
    let dir = tempfile::tempdir().unwrap();
    let input = blobs_file(dir.path(), 3, 2);
    let report = json(&owcluster(&[
        "pipeline", "--input", input.to_str().unwrap(), "--k-min", "2", "--k-max", "6", "--n-init", "10",
    ]));
    assert_eq!(report["chosen_k"], 3);
    assert_eq!(report["trace"].as_array().unwrap().len(), 5);
}

#[test]
fn bayes_estimator_runs_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let input = blobs_file(dir.path(), 3, 3);
    let report = json(&owcluster(&[
        "estimate-k", "--input", input.to_str().unwrap(), "--k-min", "2", "--k-max", "12", "--estimator", "bayes",
        "--budget", "6", "--n-init", "5",
    ]));
    assert_eq!(report["trace"].as_array().unwrap().len(), 6);
}

#[test]
fn no_labels_means_no_external_block() {
    let dir = tempfile::tempdir().unwrap();
    let input = blobs_file(dir.path(), 3, 4);
    let report = json(&owcluster(&[
        "cluster", "--input", input.to_str().unwrap(), "--labels", "none", "--k", "3", "--reducer", "pca", "--dims", "3",
    ]));
    assert!(report.get("external").is_none());
    assert!(report.get("internal").is_some());
}

#[test]
fn medoid_engine_with_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let (x, labels) = gaussian_blobs(&BlobSpec::new(120, 5, 3, 10.0, 0.5, 5));
    let input = dir.path().join("x.csv");
    write_csv(&input, &x, Some(&labels)).unwrap();
    let report = json(&owcluster(&[
        "cluster", "--input", input.to_str().unwrap(), "--k", "3", "--reducer", "none", "--engine", "fastermsc",
        "--metric", "normalized-cosine",
    ]));
    assert_eq!(report["external"]["acc"], 100.0);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = blobs_file(dir.path(), 3, 6);
    let args = ["pipeline", "--input", input.to_str().unwrap(), "--k", "3", "--seed", "7"];
    let a = owcluster(&args);
    let b = owcluster(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bad_input_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.owcl");
    std::fs::write(&input, b"XXXXjunkjunkjunkjunkjunkjunk").unwrap();
    let out = owcluster(&["pipeline", "--input", input.to_str().unwrap(), "--k", "3"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("input") && err.contains("magic"), "{err}");

    let input = blobs_file(dir.path(), 3, 7);
    let out = owcluster(&["pipeline", "--input", input.to_str().unwrap(), "--k", "300", "--reducer", "pca", "--dims", "3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cluster"));
}

#[test]
fn reduce_evaluate_and_pseudo_label() {
    let dir = tempfile::tempdir().unwrap();
    let input = blobs_file(dir.path(), 3, 8);
    let reduced = dir.path().join("y.owcl");
    let summary = json(&owcluster(&[
        "reduce", "--input", input.to_str().unwrap(), "--reducer", "pca", "--dims", "2", "--out", reduced.to_str().unwrap(),
    ]));
    assert_eq!(summary["dims"], 2);
    assert_eq!(owcluster::io::read_owcl(&reduced).unwrap().0.d(), 2);

    let report = json(&owcluster(&["cluster", "--input", reduced.to_str().unwrap(), "--k", "3", "--reducer", "none", "--no-normalize"]));
    let ids: Vec<String> = report["assignment"].as_array().unwrap().iter().map(|v| v.to_string()).collect();
    let assignment = dir.path().join("a.txt");
    std::fs::write(&assignment, ids.join("\n")).unwrap();
    let eval = json(&owcluster(&[
        "evaluate", "--input", input.to_str().unwrap(), "--assignment", assignment.to_str().unwrap(),
    ]));
    assert_eq!(eval["n"], 300);
    assert_eq!(eval["acc"], report["external"]["acc"]);

    let pseudo = json(&owcluster(&[
        "pseudo-label", "--input", input.to_str().unwrap(), "--k", "3", "--percentile", "0.5", "--reducer", "pca", "--dims", "3",
    ]));
    assert_eq!(pseudo["kept_indices"].as_array().unwrap().len(), 150);
    assert_eq!(pseudo["accuracy"], 100.0);
}
