#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use nativerisk::feed::ingest_feed;
use nativerisk::metadata::load_sidecar;
use nativerisk::scan::Scanner;
use nativerisk_core::cve::{build_database, BuildOptions, CveDatabase, CveRaw};
use nativerisk_core::fingerprint::SignatureSet;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

pub fn scan_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap()
}

pub fn feed_records(rel: &str) -> Vec<CveRaw> {
    let (records, skipped) = ingest_feed(fixture(rel)).expect("feed parses");
    assert!(skipped.is_empty(), "{rel}: {skipped:?}");
    records
}

pub fn database_from(records: &[CveRaw]) -> CveDatabase {
    build_database(
        records,
        &SignatureSet::default_set(),
        BuildOptions::default(),
    )
    .0
}

/// Scanner over the mirror feed with the corpus sidecar.
pub fn corpus_scanner() -> Scanner {
    let db = database_from(&feed_records("feeds/mirror.jsonl"));
    let mut scanner = Scanner::new(SignatureSet::default_set(), db, scan_time());
    let (sidecar, _) = load_sidecar(&fixture("sidecar.csv"), scan_time().date_naive()).unwrap();
    scanner.sidecar = Some(sidecar);
    scanner
}

pub fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}
