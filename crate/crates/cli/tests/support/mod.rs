#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/mini_vehicles.tsv");

pub fn kgsim<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_kgsim"))
        .args(args)
        .env_remove("KGSIM_PORT")
        .output()
        .expect("kgsim runs")
}

pub fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

pub fn ok(args: &[&str]) -> String {
    let output = kgsim(args);
    assert!(
        output.status.success(),
        "kgsim {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    stdout(&output)
}

/// Run every batch verb into `dir`; returns the concatenated stdout.
pub fn pipeline(dir: &Path, seed: u64) -> String {
    let out = dir.to_str().unwrap();
    let seed = seed.to_string();
    let mut log = String::new();
    for args in [
        vec!["ingest", "--graph", FIXTURE, "--out", out],
        vec!["build-taxonomy", "--out", out],
        vec!["train", "--model", "transe", "--seed", &seed, "--out", out],
        vec!["train", "--model", "complex", "--seed", &seed, "--out", out],
        vec!["lexicalize", "--write-vectors", "--out", out],
        vec!["build-index", "--mode", "partitioned", "--partitions", "4", "--probes", "2", "--seed", &seed, "--out", out],
    ] {
        log.push_str(&ok(&args));
    }
    log
}

/// Every file in `dir`, sorted by name.
pub fn artifacts(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (PathBuf::from(p.file_name().unwrap()), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}
