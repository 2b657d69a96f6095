#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ksvd-bench"))
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = bench().args(args).output().expect("spawn ksvd-bench");
    assert!(
        out.status.success(),
        "ksvd-bench {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// CSV body without the two comment lines.
pub fn table_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with("# ksvd-bench") && !l.starts_with("# config:")).collect()
}

pub fn column<'a>(text: &'a str, name: &str) -> Vec<&'a str> {
    let lines = table_lines(text);
    let header: Vec<&str> = lines[0].split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines[1..].iter().map(|l| l.split(',').nth(idx).unwrap()).collect()
}
