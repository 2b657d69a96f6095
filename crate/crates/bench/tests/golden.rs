//! Pins the versioned table layouts. Changing a column means bumping the
//! schema version and updating the file under `tests/golden/`.

mod common;

use common::*;

fn schema_and_header(text: &str) -> String {
    let mut lines = text.lines().filter(|l| !l.starts_with("# config:"));
    format!("{}\n{}\n", lines.next().unwrap(), lines.next().unwrap())
}

fn golden(name: &str) -> String {
    read(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name))
}

fn check(name: &str, args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let mut full = vec!["--repeats", "1", "--format", "csv", "--out", out.to_str().unwrap()];
    full.extend_from_slice(args);
    run_ok(&full);
    assert_eq!(schema_and_header(&read(&out)), golden(name), "{name}");
}

#[test]
fn compare_schema() {
    check(
        "compare.csv",
        &["compare", "--sizes", "40x30", "--rank-true", "5", "--methods", "fsvd", "--r", "3"],
    );
}

#[test]
fn rank_schema() {
    check("rank.csv", &["rank", "--size", "40x30"]);
}

#[test]
fn svd_schema() {
    check("svd.csv", &["svd", "--size", "40x30", "--r", "3"]);
}

#[test]
fn triplets_schema() {
    check("triplets.csv", &["triplets", "--size", "40x30", "--rank-true", "10", "--r", "5"]);
}

#[test]
fn rsl_schema() {
    check(
        "rsl.csv",
        &[
            "rsl", "--d1", "8", "--d2", "6", "--rank", "2", "--rank-true", "2", "--steps", "3",
            "--n-train", "20", "--n-test", "20",
        ],
    );
}

#[test]
fn config_line_follows_schema_line() {
    let out = run_ok(&["--repeats", "1", "--format", "csv", "rank", "--size", "10x10"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# ksvd-bench rank/v"));
    assert!(lines[1].starts_with("# config: {\"config_version\":1,"));
}
