mod common;

use common::*;
use ksvd::io::save_klrm;
use ksvd::DenseMatrix;
use ksvd_bench::report::{extract_config, mask_timing};

#[test]
fn compare_small_fsvd_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    run_ok(&[
        "--repeats", "1", "--out", out.to_str().unwrap(), "compare", "--sizes", "200x200",
        "--rank-true", "40", "--methods", "fsvd", "--r", "20",
    ]);
    let text = read(&out);
    let err: f64 = column(&text, "err_rel")[0].parse().unwrap();
    assert!(err <= 1e-12, "{err}");
    assert_eq!(column(&text, "rank_estimated"), vec!["40"]);
    let cfg = extract_config(&out).unwrap();
    assert_eq!(cfg.repeats, 1);
}

#[test]
fn repeats_leave_error_columns_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, repeats) in [(&a, "1"), (&b, "3")] {
        run_ok(&[
            "--repeats", repeats, "--out", path.to_str().unwrap(), "compare", "--sizes", "120x90",
            "--rank-true", "30", "--methods", "fsvd,rsvd-default", "--r", "10",
        ]);
    }
    for col in ["err_res", "err_rel", "k_prime", "rank_estimated"] {
        assert_eq!(column(&read(&a), col), column(&read(&b), col), "{col}");
    }
}

#[test]
fn unknown_method_is_a_config_error() {
    let out = bench().args(["compare", "--methods", "magic"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("fsvd") && msg.contains("rsvd-default"), "{msg}");
}

#[test]
fn memory_cap_is_a_config_error() {
    let out = bench()
        .args(["--max-elems", "100", "rank", "--size", "20x20"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_cap_is_a_config_error() {
    let out = bench().args(["triplets", "--size", "2000x50"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_finite_input_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nan.klrm");
    let mut a = DenseMatrix::identity(5);
    a.set(2, 3, f64::NAN);
    save_klrm(&path, &a).unwrap();
    let out = bench()
        .args(["--repeats", "1", "svd", "--input", path.to_str().unwrap(), "--r", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn file_input_matches_in_memory_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.klrm");
    run_ok(&["--seed", "9", "--out", m.to_str().unwrap(), "gen", "--size", "150x120", "--rank-true", "25"]);
    assert!(dir.path().join("m.klrm.config.json").exists());
    let from_file = run_ok(&[
        "--seed", "9", "--repeats", "1", "--format", "csv", "rank", "--input", m.to_str().unwrap(),
    ]);
    let in_memory = run_ok(&[
        "--seed", "9", "--repeats", "1", "--format", "csv", "rank", "--size", "150x120",
        "--rank-true", "25",
    ]);
    let a = String::from_utf8(from_file.stdout).unwrap();
    let b = String::from_utf8(in_memory.stdout).unwrap();
    for col in ["rank", "k_prime", "oracle_rank"] {
        assert_eq!(column(&a, col), column(&b, col), "{col}");
    }
    assert_eq!(column(&a, "rank"), vec!["25"]);

    // CSV matrices carry their config inline and load the same way.
    let c = dir.path().join("m.csv");
    run_ok(&["--seed", "9", "--out", c.to_str().unwrap(), "gen", "--size", "150x120", "--rank-true", "25"]);
    let from_csv = run_ok(&[
        "--seed", "9", "--repeats", "1", "--format", "csv", "rank", "--input", c.to_str().unwrap(),
    ]);
    assert_eq!(column(&String::from_utf8(from_csv.stdout).unwrap(), "rank"), vec!["25"]);
}

#[test]
fn eps_sweep_is_monotone() {
    let out = run_ok(&[
        "--repeats", "1", "--format", "csv", "rank", "--size", "200x150", "--eps",
        "1e-2,1e-6,1e-8,1e-10",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let ranks: Vec<usize> = column(&text, "rank").iter().map(|r| r.parse().unwrap()).collect();
    assert_eq!(ranks.len(), 4);
    assert!(ranks.windows(2).all(|w| w[0] <= w[1]), "{ranks:?}");
}

#[test]
fn rank_json_reports_iterations() {
    let out = run_ok(&["--repeats", "1", "rank", "--size", "300x300", "--rank-true", "30"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &doc["rows"][0];
    assert_eq!(row["rank"], 30);
    assert!(row["k_prime"].as_u64().unwrap() >= 30);
    assert!(row["seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(row["oracle_rank"], 30);
    assert_eq!(doc["config"]["command"]["verb"], "rank");
}

#[test]
fn rsl_without_steps_reports_initial_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    run_ok(&[
        "--out", out.to_str().unwrap(), "rsl", "--steps", "0", "--d1", "16", "--d2", "12",
        "--rank", "2", "--rank-true", "2", "--n-train", "50", "--n-test", "50",
    ]);
    assert_eq!(table_lines(&read(&out)).len(), 1, "only the header");
    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("h.csv.summary.json"))).unwrap();
    for row in summary["rows"].as_array().unwrap() {
        assert_eq!(row["init_accuracy"], row["final_accuracy"]);
    }
}

#[test]
fn rsl_invalid_grid_is_rejected() {
    let out = bench().args(["rsl", "--backends", "lanczos"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_reproduces_svd_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    run_ok(&[
        "--repeats", "1", "--format", "tsv", "--out", a.to_str().unwrap(), "svd", "--size", "80x60",
        "--rank-true", "10", "--r", "5",
    ]);
    run_ok(&["--out", b.to_str().unwrap(), "replay", a.to_str().unwrap()]);
    assert_eq!(read(&a), read(&b));
    assert_eq!(
        mask_timing(&read(&dir.path().join("a.tsv.summary.json"))),
        mask_timing(&read(&dir.path().join("b.tsv.summary.json")))
    );
}

#[test]
fn replay_without_config_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("plain.csv");
    std::fs::write(&p, "1,2\n3,4\n").unwrap();
    let out = bench().args(["replay", p.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
