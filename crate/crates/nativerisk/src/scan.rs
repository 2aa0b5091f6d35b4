//! Single-APK scans and parallel batch scans.

use std::io;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use nativerisk_core::apk::select_abi;
use nativerisk_core::cve::CveDatabase;
use nativerisk_core::fingerprint::SignatureSet;
use nativerisk_core::pipeline::{assess_app, NativeContents, ScanOptions};
use nativerisk_core::report::{aggregate_stats, AppReport, GroupKey};
use rayon::prelude::*;

use crate::apk::{extract_native_libraries, open_apk, ApkError};
use crate::metadata::{load_metadata, Sidecar};
use crate::report_io::{emit_app_report, emit_cve_log, stats_csv};

/// Everything a scan needs besides the APK itself. Shared read-only across
/// batch workers.
#[derive(Debug, Clone)]
pub struct Scanner {
    pub signatures: SignatureSet,
    pub database: CveDatabase,
    pub sidecar: Option<Sidecar>,
    /// Scan this ABI instead of the preferred list.
    pub abi_override: Option<String>,
    pub options: ScanOptions,
    pub scan_time: DateTime<Utc>,
}

impl Scanner {
    pub fn new(signatures: SignatureSet, database: CveDatabase, scan_time: DateTime<Utc>) -> Self {
        Self {
            signatures,
            database,
            sidecar: None,
            abi_override: None,
            options: ScanOptions::default(),
            scan_time,
        }
    }

    pub fn scan_apk(&self, path: &Path) -> Result<AppReport, ApkError> {
        let apk = open_apk(path)?;
        let today = self.scan_time.date_naive();
        let meta = load_metadata(&apk, self.sidecar.as_ref(), today);
        let available = apk.available_abis();
        let abi = match &self.abi_override {
            Some(wanted) => available.iter().find(|a| *a == wanted).cloned(),
            None => select_abi(&available).map(str::to_string),
        };
        let native_code = apk.has_native_code();
        if native_code && abi.is_none() {
            log::info!(
                "{}: native code only for {available:?}, not scanned",
                path.display()
            );
        }
        let (blobs, corrupt) = match &abi {
            Some(abi) => extract_native_libraries(&apk, abi)?,
            None => (Vec::new(), Vec::new()),
        };
        let contents = NativeContents {
            abi,
            native_code,
            libraries: blobs.into_iter().map(|b| (b.file_name, b.bytes)).collect(),
            corrupt_entries: corrupt.into_iter().map(|c| c.archive_path).collect(),
        };
        Ok(assess_app(
            meta,
            &contents,
            &self.signatures,
            &self.database,
            self.options,
            self.scan_time,
        ))
    }

    /// Scans `paths` on `jobs` threads (all cores when `None`). A failing or
    /// panicking APK is recorded and the rest continue. Reports come back
    /// sorted by APK digest, one per distinct APK.
    pub fn scan_batch(&self, paths: &[PathBuf], jobs: Option<usize>) -> BatchOutcome {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.unwrap_or(0))
            .build()
            .expect("thread pool");
        let results: Vec<Result<AppReport, String>> = pool.install(|| {
            paths
                .par_iter()
                .map(
                    |p| match catch_unwind(AssertUnwindSafe(|| self.scan_apk(p))) {
                        Ok(Ok(report)) => Ok(report),
                        Ok(Err(e)) => Err(e.to_string()),
                        Err(panic) => Err(format!(
                            "{}: scan panicked: {}",
                            p.display(),
                            panic_message(&panic)
                        )),
                    },
                )
                .collect()
        });
        let mut reports = Vec::new();
        let mut failures = Vec::new();
        for (path, result) in paths.iter().zip(results) {
            match result {
                Ok(r) => reports.push(r),
                Err(e) => {
                    log::error!("{e}");
                    failures.push((path.clone(), e));
                }
            }
        }
        reports.sort_by(|a, b| a.apk_id.cmp(&b.apk_id));
        reports.dedup_by(|a, b| a.apk_id == b.apk_id);
        BatchOutcome { reports, failures }
    }
}

fn panic_message(panic: &Box<dyn std::any::Any + Send>) -> String {
    panic
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| panic.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub reports: Vec<AppReport>,
    pub failures: Vec<(PathBuf, String)>,
}

impl BatchOutcome {
    pub fn native_count(&self) -> usize {
        self.reports.iter().filter(|r| r.native_code).count()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{}/{} with native code, {} failed",
            self.native_count(),
            self.reports.len(),
            self.failures.len()
        )
    }

    /// One `<apk_id>.json` per app, `cve.log`, `stats_year.csv` and
    /// `stats_market.csv`.
    pub fn write_outputs(&self, out_dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(out_dir)?;
        for r in &self.reports {
            std::fs::write(
                out_dir.join(format!("{}.json", r.apk_id)),
                emit_app_report(r),
            )?;
        }
        std::fs::write(out_dir.join("cve.log"), emit_cve_log(&self.reports))?;
        std::fs::write(
            out_dir.join("stats_year.csv"),
            stats_csv(&aggregate_stats(&self.reports, GroupKey::Year)),
        )?;
        std::fs::write(
            out_dir.join("stats_market.csv"),
            stats_csv(&aggregate_stats(&self.reports, GroupKey::Market)),
        )?;
        Ok(())
    }
}

fn sorted_files_with_extension(dir: &Path, ext: &str) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file()
            && path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case(ext))
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// `*.apk` files directly inside `dir`, sorted by name.
pub fn list_apks(dir: &Path) -> io::Result<Vec<PathBuf>> {
    sorted_files_with_extension(dir, "apk")
}

#[derive(Debug, thiserror::Error)]
pub enum ReportDirError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Every `*.json` report in `dir`, sorted by file name.
pub fn load_reports(dir: &Path) -> Result<Vec<AppReport>, ReportDirError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportDirError::Io { path, source }
    };
    let mut reports = Vec::new();
    for path in sorted_files_with_extension(dir, "json").map_err(io_err(dir))? {
        let bytes = std::fs::read(&path).map_err(io_err(&path))?;
        let report = crate::report_io::parse_app_report(&bytes)
            .map_err(|source| ReportDirError::Parse { path, source })?;
        reports.push(report);
    }
    Ok(reports)
}
