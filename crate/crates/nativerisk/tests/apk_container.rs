//! Archive handling over the fixture corpus: digests, ABI listing,
//! corrupt entries, release dates and scan outcomes.

mod common;

use nativerisk::apk::{extract_native_libraries, open_apk, sha256_file, ApkError};
use nativerisk::metadata::load_metadata;
use nativerisk_core::apk::ReleaseDateSource;
use nativerisk_core::risk::{RiskLevel, VulnLevel};

use common::*;

#[test]
fn digests_match_sha256sum() {
    let lines = read_lines(&fixture("apk/SHA256SUMS"));
    assert_eq!(lines.len(), 11);
    for line in lines {
        let (digest, rel) = line.split_once("  ").unwrap();
        let path = fixture(&format!("apk/{rel}"));
        assert_eq!(sha256_file(&path).unwrap(), digest, "{rel}");
        if rel.starts_with("corpus/") {
            assert_eq!(open_apk(&path).unwrap().sha256, digest);
        }
    }
}

#[test]
fn empty_file_is_not_an_archive() {
    let err = open_apk(fixture("apk/not_an_apk.apk")).unwrap_err();
    assert!(matches!(err, ApkError::NotAnArchive { .. }), "{err}");
    assert!(matches!(
        open_apk(fixture("apk/missing.apk")),
        Err(ApkError::Io { .. })
    ));
}

#[test]
fn abi_listing() {
    let apk = open_apk(fixture("apk/corpus/01_heartbleed.apk")).unwrap();
    assert_eq!(apk.available_abis(), ["armeabi-v7a", "arm64-v8a"]);
    assert!(apk.has_native_code());

    let plain = open_apk(fixture("apk/corpus/06_no_native.apk")).unwrap();
    assert!(plain.available_abis().is_empty());
    assert!(!plain.has_native_code());
    assert_eq!(plain.entries.len(), 3);
}

#[test]
fn corrupt_entry_reported_and_rest_extracted() {
    let apk = open_apk(fixture("apk/corpus/08_corrupt_entry.apk")).unwrap();
    let (blobs, corrupt) = extract_native_libraries(&apk, "armeabi-v7a").unwrap();
    assert_eq!(blobs.len(), 1);
    assert_eq!(blobs[0].file_name, "libpng16.so");
    assert_eq!(corrupt.len(), 1);
    assert_eq!(corrupt[0].archive_path, "lib/armeabi-v7a/libbad.so");
}

#[test]
fn nested_paths_are_not_libraries() {
    let apk = open_apk(fixture("apk/corpus/10_multi.apk")).unwrap();
    let (blobs, _) = extract_native_libraries(&apk, "armeabi-v7a").unwrap();
    let names: Vec<&str> = blobs.iter().map(|b| b.file_name.as_str()).collect();
    assert_eq!(names, ["libssl.so", "libpng16.so", "liblua.so"]);
}

#[test]
fn release_date_sources() {
    let scanner = corpus_scanner();
    let sidecar = scanner.sidecar.as_ref().unwrap();
    let today = scan_time().date_naive();

    let meta = load_metadata(
        &open_apk(fixture("apk/corpus/02_stripped_openssl.apk")).unwrap(),
        Some(sidecar),
        today,
    );
    assert_eq!(meta.release_date.unwrap().to_string(), "2014-05-20");
    assert_eq!(meta.release_date_source, ReleaseDateSource::Sidecar);
    assert_eq!(meta.market.as_deref(), Some("anzhi"));

    // malformed sidecar date: falls back to the archive timestamps
    let meta = load_metadata(
        &open_apk(fixture("apk/corpus/05_lua32.apk")).unwrap(),
        Some(sidecar),
        today,
    );
    assert_eq!(meta.release_date.unwrap().to_string(), "2019-03-01");
    assert_eq!(
        meta.release_date_source,
        ReleaseDateSource::ArchiveTimestamp
    );

    let meta = load_metadata(
        &open_apk(fixture("apk/corpus/04_opencv.apk")).unwrap(),
        Some(sidecar),
        today,
    );
    assert_eq!(meta.market, None);
}

#[test]
fn scan_outcomes_per_app() {
    let scanner = corpus_scanner();
    let scan = |name: &str| {
        scanner
            .scan_apk(&fixture(&format!("apk/corpus/{name}.apk")))
            .unwrap()
    };

    let r = scan("01_heartbleed");
    assert_eq!(r.abi.as_deref(), Some("armeabi-v7a"));
    assert_eq!(r.app_risk, RiskLevel::High);

    let r = scan("02_stripped_openssl");
    assert!(r.libraries[0].stripped);
    let hb = r.libraries[0]
        .findings
        .iter()
        .find(|f| f.cve_id == "CVE-2014-0160")
        .unwrap();
    assert_eq!(hb.vuln_level, VulnLevel::High);
    assert_eq!(r.app_risk, RiskLevel::Medium);

    let r = scan("06_no_native");
    assert!(!r.native_code);
    assert_eq!(r.app_risk, RiskLevel::None);

    let r = scan("07_x86_only");
    assert!(r.native_code);
    assert_eq!(r.abi, None);
    assert!(r.libraries.is_empty());

    let r = scan("09_junk_so");
    let junk = r
        .libraries
        .iter()
        .find(|l| l.library_name == "libjunk.so")
        .unwrap();
    assert!(junk.error.is_some());
    assert_eq!(junk.library_risk, RiskLevel::None);
    assert_eq!(r.app_risk, RiskLevel::High);
}

#[test]
fn abi_override() {
    let mut scanner = corpus_scanner();
    scanner.abi_override = Some("x86".into());
    let r = scanner
        .scan_apk(&fixture("apk/corpus/07_x86_only.apk"))
        .unwrap();
    assert_eq!(r.abi.as_deref(), Some("x86"));
    assert_eq!(r.app_risk, RiskLevel::High);

    scanner.abi_override = Some("mips".into());
    let r = scanner
        .scan_apk(&fixture("apk/corpus/01_heartbleed.apk"))
        .unwrap();
    assert_eq!(r.abi, None);
    assert!(r.libraries.is_empty());
}
