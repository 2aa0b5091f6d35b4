//! Per-app report model, the CVE log and grouped statistics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

use crate::apk::AppMetadata;
use crate::fingerprint::ProductMatch;
use crate::risk::{app_risk, library_risk, CveFinding, RiskLevel};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Bucket for apps whose grouping field is unknown.
pub const UNKNOWN_KEY: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryFinding {
    /// File name inside the archive (`libfoo.so`).
    pub library_name: String,
    pub products: Vec<ProductMatch>,
    pub findings: Vec<CveFinding>,
    pub library_risk: RiskLevel,
    pub stripped: bool,
    /// Set when the file could not be parsed as an ELF.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl LibraryFinding {
    pub fn new(
        library_name: impl Into<String>,
        products: Vec<ProductMatch>,
        findings: Vec<CveFinding>,
        stripped: bool,
    ) -> Self {
        let library_risk = library_risk(&findings, !products.is_empty());
        Self {
            library_name: library_name.into(),
            products,
            findings,
            library_risk,
            stripped,
            error: None,
        }
    }

    pub fn unreadable(library_name: impl Into<String>, error: impl Into<String>) -> Self {
        Self {
            library_name: library_name.into(),
            products: Vec::new(),
            findings: Vec::new(),
            library_risk: RiskLevel::None,
            stripped: false,
            error: Some(error.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppReport {
    pub schema_version: u32,
    pub apk_id: String,
    pub metadata: AppMetadata,
    /// ABI whose libraries were analysed.
    pub abi: Option<String>,
    /// Whether the archive ships anything under `lib/`, in any ABI.
    pub native_code: bool,
    pub libraries: Vec<LibraryFinding>,
    /// Archive entries that could not be read.
    pub corrupt_entries: Vec<String>,
    pub app_risk: RiskLevel,
    pub scan_timestamp: DateTime<Utc>,
}

impl AppReport {
    pub fn new(
        metadata: AppMetadata,
        abi: Option<String>,
        native_code: bool,
        libraries: Vec<LibraryFinding>,
        corrupt_entries: Vec<String>,
        scan_timestamp: DateTime<Utc>,
    ) -> Self {
        let risks: Vec<RiskLevel> = libraries.iter().map(|l| l.library_risk).collect();
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            apk_id: metadata.apk_id.clone(),
            metadata,
            abi,
            native_code,
            libraries,
            corrupt_entries,
            app_risk: app_risk(&risks),
            scan_timestamp,
        }
    }

    pub fn finding_count(&self) -> usize {
        self.libraries.iter().map(|l| l.findings.len()).sum()
    }
}

/// Tab-separated `apk_id library cve_id vuln_level risk`, one line per
/// finding, sorted by those columns. No header; empty when nothing was found.
pub fn emit_cve_log(reports: &[AppReport]) -> String {
    let mut rows: Vec<[&str; 5]> = Vec::new();
    for r in reports {
        for lib in &r.libraries {
            for f in &lib.findings {
                rows.push([
                    &r.apk_id,
                    &lib.library_name,
                    &f.cve_id,
                    f.vuln_level.as_str(),
                    f.risk_label(),
                ]);
            }
        }
    }
    rows.sort_unstable();
    let mut out = String::new();
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKey {
    Year,
    Market,
}

impl GroupKey {
    fn key_of(self, report: &AppReport) -> String {
        match self {
            GroupKey::Year => report
                .metadata
                .release_date
                .map(|d| format!("{:04}", d.year())),
            GroupKey::Market => report.metadata.market.clone().filter(|m| !m.is_empty()),
        }
        .unwrap_or_else(|| UNKNOWN_KEY.to_string())
    }
}

/// App counts per group and risk level; columns follow `RiskLevel::ALL`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsTable {
    pub group_key: GroupKey,
    pub rows: BTreeMap<String, [u64; 5]>,
}

impl StatsTable {
    pub fn new(group_key: GroupKey) -> Self {
        Self {
            group_key,
            rows: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, report: &AppReport) {
        self.rows.entry(self.group_key.key_of(report)).or_default()[report.app_risk as usize] += 1;
    }

    /// Sums another table with the same key into this one.
    pub fn merge(mut self, other: StatsTable) -> StatsTable {
        debug_assert_eq!(self.group_key, other.group_key);
        for (key, counts) in other.rows {
            let row = self.rows.entry(key).or_default();
            for (a, b) in row.iter_mut().zip(counts) {
                *a += b;
            }
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.rows.values().flatten().sum()
    }
}

pub fn aggregate_stats(reports: &[AppReport], key: GroupKey) -> StatsTable {
    let mut table = StatsTable::new(key);
    for r in reports {
        table.add(r);
    }
    table
}
