//! Library- and app-level assessment over already-extracted bytes.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::{DateTime, Utc};

use crate::apk::AppMetadata;
use crate::cve::CveDatabase;
use crate::elf::{parse_elf_with, DEFAULT_MIN_STRING_LEN};
use crate::fingerprint::{match_products, SignatureSet};
use crate::report::{AppReport, LibraryFinding};
use crate::risk::{score_cve, LibraryEvidence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    pub min_string_len: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            min_string_len: DEFAULT_MIN_STRING_LEN,
        }
    }
}

/// Fingerprints one shared object and scores every CVE entry that the
/// database returns for each matched product.
pub fn assess_library(
    library_name: &str,
    bytes: &[u8],
    sigs: &SignatureSet,
    db: &CveDatabase,
    meta: &AppMetadata,
    opts: ScanOptions,
) -> LibraryFinding {
    let elf = match parse_elf_with(bytes, opts.min_string_len) {
        Ok(elf) => elf,
        Err(e) => {
            log::warn!("{}: {library_name}: {e}", meta.apk_id);
            return LibraryFinding::unreadable(library_name, e.to_string());
        }
    };
    let products = match_products(&elf.strings, &elf.functions, sigs);
    let mut findings = Vec::new();
    for m in &products {
        let evidence = LibraryEvidence::new(
            m.product.clone(),
            m.version.clone(),
            &elf.functions,
            elf.stripped,
        );
        let entries = match db.query(&m.product, m.version.as_ref()) {
            Ok(entries) => entries,
            Err(e) => {
                log::warn!("{}: {library_name}: {e}", meta.apk_id);
                continue;
            }
        };
        for entry in entries {
            match score_cve(&evidence, entry, meta) {
                Ok(f) => findings.push(f),
                Err(e) => log::warn!("{}: {library_name}: {}: {e}", meta.apk_id, entry.cve_id),
            }
        }
    }
    LibraryFinding::new(library_name, products, findings, elf.stripped)
}

/// Native libraries of one app, already pulled out of the archive.
#[derive(Debug, Clone, Default)]
pub struct NativeContents {
    /// ABI the libraries come from; `None` when none of the preferred ABIs
    /// is present.
    pub abi: Option<String>,
    /// Anything under `lib/`, in any ABI.
    pub native_code: bool,
    /// `(file name, bytes)` in archive order.
    pub libraries: Vec<(String, Vec<u8>)>,
    pub corrupt_entries: Vec<String>,
}

pub fn assess_app(
    meta: AppMetadata,
    contents: &NativeContents,
    sigs: &SignatureSet,
    db: &CveDatabase,
    opts: ScanOptions,
    scan_timestamp: DateTime<Utc>,
) -> AppReport {
    let libraries = contents
        .libraries
        .iter()
        .map(|(name, bytes)| assess_library(name, bytes, sigs, db, &meta, opts))
        .collect();
    AppReport::new(
        meta,
        contents.abi.clone(),
        contents.native_code,
        libraries,
        contents.corrupt_entries.clone(),
        scan_timestamp,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apk::ReleaseDateSource;
    use crate::cve::{build_database, BuildOptions, CveRaw, CvssVersion};
    use crate::elf::{ElfClass, ElfWriter, SymbolDef};
    use crate::risk::{RiskLevel, VulnLevel};
    use alloc::vec;
    use chrono::{NaiveDate, TimeZone};

    fn db() -> CveDatabase {
        let raw = CveRaw {
            cve_id: "CVE-2014-0160".into(),
            description: "The (1) TLS and (2) DTLS implementations in OpenSSL 1.0.1 before 1.0.1g do not properly handle Heartbeat Extension packets".into(),
            published: NaiveDate::from_ymd_opt(2014, 4, 7).unwrap(),
            cvss_version: Some(CvssVersion::V31),
            exploitability: Some(3.9),
            impact: Some(3.6),
            listed_products: Vec::new(),
            functions: vec!["dtls1_process_heartbeat".into()],
        };
        build_database(
            &[raw],
            &SignatureSet::default_set(),
            BuildOptions::default(),
        )
        .0
    }

    fn openssl_so(symbols: bool) -> Vec<u8> {
        let mut w = ElfWriter::new(ElfClass::Elf32).rodata(b"\0OpenSSL 1.0.1f 6 Jan 2014\0");
        if symbols {
            w = w
                .symbol(SymbolDef::function("dtls1_process_heartbeat"))
                .symbol(SymbolDef::function("SSL_new"));
        } else {
            w = w.no_symbols();
        }
        w.build()
    }

    fn meta() -> AppMetadata {
        AppMetadata::new("f".repeat(64)).with_release_date(
            NaiveDate::from_ymd_opt(2014, 9, 1).unwrap(),
            ReleaseDateSource::Sidecar,
        )
    }

    fn ts() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn heartbleed_library() {
        let lib = assess_library(
            "libssl.so",
            &openssl_so(true),
            &SignatureSet::default_set(),
            &db(),
            &meta(),
            ScanOptions::default(),
        );
        assert_eq!(lib.products.len(), 1);
        assert_eq!(lib.findings.len(), 1);
        assert_eq!(lib.findings[0].vuln_level, VulnLevel::Critical);
        assert_eq!(lib.library_risk, RiskLevel::High);
    }

    #[test]
    fn stripped_library_is_high_vuln() {
        let lib = assess_library(
            "libssl.so",
            &openssl_so(false),
            &SignatureSet::default_set(),
            &db(),
            &meta(),
            ScanOptions::default(),
        );
        assert!(lib.stripped);
        assert_eq!(lib.findings[0].vuln_level, VulnLevel::High);
    }

    #[test]
    fn app_rollup_and_bad_elf() {
        let contents = NativeContents {
            abi: Some("armeabi-v7a".into()),
            native_code: true,
            libraries: vec![
                ("libssl.so".into(), openssl_so(true)),
                ("libjunk.so".into(), b"not an elf".to_vec()),
            ],
            corrupt_entries: Vec::new(),
        };
        let report = assess_app(
            meta(),
            &contents,
            &SignatureSet::default_set(),
            &db(),
            ScanOptions::default(),
            ts(),
        );
        assert_eq!(report.app_risk, RiskLevel::High);
        assert_eq!(report.libraries[1].library_risk, RiskLevel::None);
        assert!(report.libraries[1].error.is_some());
        let empty = assess_app(
            meta(),
            &NativeContents::default(),
            &SignatureSet::default_set(),
            &db(),
            ScanOptions::default(),
            ts(),
        );
        assert_eq!(empty.app_risk, RiskLevel::None);
    }
}
