//! Per-CVE evidence levels, the threat × impact product, the severity bands,
//! the risk matrix, and max aggregation to library and app level.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::apk::AppMetadata;
use crate::cve::CveEntry;
use crate::version::Version;

/// Two years, as used by the MEDIUM rule.
pub const MEDIUM_WINDOW_DAYS: i64 = 730;

/// How strongly the evidence ties a CVE to a library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VulnLevel {
    None,
    Low,
    Medium,
    High,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SeverityClass {
    Low,
    Medium,
    High,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RiskLevel {
    None,
    Low,
    Medium,
    High,
    Critical,
}

impl VulnLevel {
    pub const ALL: [VulnLevel; 5] = [
        Self::None,
        Self::Low,
        Self::Medium,
        Self::High,
        Self::Critical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "NONE",
            Self::Low => "LOW",
            Self::Medium => "MEDIUM",
            Self::High => "HIGH",
            Self::Critical => "CRITICAL",
        }
    }
}

impl SeverityClass {
    pub const ALL: [SeverityClass; 4] = [Self::Low, Self::Medium, Self::High, Self::Critical];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "LOW",
            Self::Medium => "MEDIUM",
            Self::High => "HIGH",
            Self::Critical => "CRITICAL",
        }
    }
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 5] = [
        Self::None,
        Self::Low,
        Self::Medium,
        Self::High,
        Self::Critical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "NONE",
            Self::Low => "LOW",
            Self::Medium => "MEDIUM",
            Self::High => "HIGH",
            Self::Critical => "CRITICAL",
        }
    }
}

macro_rules! display_as_str {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    )*};
}
display_as_str!(VulnLevel, SeverityClass, RiskLevel);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RiskError {
    #[error("app release date unknown; cannot apply the two-year rule for {cve_id}")]
    MissingReleaseDate { cve_id: String },
    #[error("value {0} out of range")]
    OutOfRange(f64),
    #[error("evidence for `{evidence}` scored against an entry for `{entry}`")]
    ProductMismatch { evidence: String, entry: String },
}

/// What the fingerprinting step learned about one product in one library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryEvidence {
    pub product: String,
    pub version: Option<Version>,
    /// Function names present in the library's symbol list.
    pub matched_functions: BTreeSet<String>,
    pub stripped: bool,
}

impl LibraryEvidence {
    pub fn new<S: AsRef<str>>(
        product: impl Into<String>,
        version: Option<Version>,
        functions: &[S],
        stripped: bool,
    ) -> Self {
        let matched_functions = if stripped {
            BTreeSet::new()
        } else {
            functions.iter().map(|f| String::from(f.as_ref())).collect()
        };
        Self {
            product: product.into(),
            version,
            matched_functions,
            stripped,
        }
    }

    pub fn version_found(&self) -> bool {
        self.version.is_some()
    }
}

/// Entry functions confirmed in the library, in entry order.
fn confirmed_functions(ev: &LibraryEvidence, entry: &CveEntry) -> Vec<String> {
    if ev.stripped {
        return Vec::new();
    }
    entry
        .functions
        .iter()
        .filter(|f| ev.matched_functions.contains(*f))
        .cloned()
        .collect()
}

/// Evidence level for one CVE entry against one matched product.
///
/// CRITICAL needs an admitted version and a confirmed vulnerable function;
/// an admitted version alone gives HIGH. Without a version, a confirmed
/// function gives MEDIUM when the app was released within two years of the
/// CVE. Anything else is LOW. NONE is never returned.
pub fn classify_vulnerability_level(
    ev: &LibraryEvidence,
    entry: &CveEntry,
    meta: &AppMetadata,
) -> Result<VulnLevel, RiskError> {
    if ev.product != entry.product {
        return Err(RiskError::ProductMismatch {
            evidence: ev.product.clone(),
            entry: entry.product.clone(),
        });
    }
    let confirmed = !confirmed_functions(ev, entry).is_empty();
    match &ev.version {
        Some(v) if entry.admits(v) => Ok(if confirmed {
            VulnLevel::Critical
        } else {
            VulnLevel::High
        }),
        Some(_) => Ok(VulnLevel::Low),
        None if confirmed => {
            let release = meta
                .release_date
                .ok_or_else(|| RiskError::MissingReleaseDate {
                    cve_id: entry.cve_id.clone(),
                })?;
            let days = (release - entry.published).num_days().abs();
            Ok(if days < MEDIUM_WINDOW_DAYS {
                VulnLevel::Medium
            } else {
                VulnLevel::Low
            })
        }
        None => Ok(VulnLevel::Low),
    }
}

fn check_subscore(x: f64) -> Result<f64, RiskError> {
    if (0.0..=10.0).contains(&x) {
        Ok(x)
    } else {
        Err(RiskError::OutOfRange(x))
    }
}

/// `threat * impact` on the 0..=100 scale, rounded to four decimals so that
/// one-decimal subscores give the exact decimal product (3.9 * 3.6 = 14.04).
pub fn threat_impact_product(threat: f64, impact: f64) -> Result<f64, RiskError> {
    let p = check_subscore(threat)? * check_subscore(impact)?;
    // no_std has no f64::round; the value is non-negative so truncation works.
    Ok(((p * 10_000.0 + 0.5) as u64) as f64 / 10_000.0)
}

/// Half-open bands: [0,40) LOW, [40,70) MEDIUM, [70,90) HIGH, [90,100] CRITICAL.
pub fn qualitative_severity(score: f64) -> Result<SeverityClass, RiskError> {
    if !(0.0..=100.0).contains(&score) {
        return Err(RiskError::OutOfRange(score));
    }
    Ok(if score >= 90.0 {
        SeverityClass::Critical
    } else if score >= 70.0 {
        SeverityClass::High
    } else if score >= 40.0 {
        SeverityClass::Medium
    } else {
        SeverityClass::Low
    })
}

use RiskLevel as R;

/// Rows LOW..CRITICAL severity, columns NONE..CRITICAL vulnerability.
const RISK_MATRIX: [[RiskLevel; 5]; 4] = [
    [R::Low, R::Low, R::Medium, R::Medium, R::High],
    [R::Low, R::Medium, R::Medium, R::High, R::High],
    [R::Medium, R::Medium, R::High, R::High, R::Critical],
    [R::Medium, R::High, R::High, R::Critical, R::Critical],
];

pub fn risk_matrix_lookup(sev: SeverityClass, vuln: VulnLevel) -> RiskLevel {
    RISK_MATRIX[sev as usize][vuln as usize]
}

/// Result of scoring one CVE against one library product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveFinding {
    pub cve_id: String,
    pub product: String,
    pub vuln_level: VulnLevel,
    /// `threat * impact`; absent for entries without subscores.
    pub score: Option<f64>,
    pub severity: Option<SeverityClass>,
    /// Absent means UNSCORED.
    pub risk: Option<RiskLevel>,
    pub matched_functions: Vec<String>,
    pub rationale: String,
    /// Set when the MEDIUM rule could not run for lack of a release date.
    #[serde(default)]
    pub downgraded: bool,
}

impl CveFinding {
    pub fn risk_label(&self) -> &'static str {
        self.risk.map_or("UNSCORED", RiskLevel::as_str)
    }
}

/// Classification, product, severity band and matrix cell, in that order.
/// A missing release date on the MEDIUM path downgrades to LOW with a
/// warning instead of failing.
pub fn score_cve(
    ev: &LibraryEvidence,
    entry: &CveEntry,
    meta: &AppMetadata,
) -> Result<CveFinding, RiskError> {
    let mut trail: Vec<String> = Vec::new();
    let matched = confirmed_functions(ev, entry);
    match &ev.version {
        Some(v) => trail.push(format!(
            "version {v} {}",
            if entry.admits(v) {
                "admitted by entry"
            } else {
                "not admitted by entry"
            }
        )),
        None if ev.stripped => trail.push(String::from("no version found; stripped binary")),
        None => trail.push(String::from("no version found")),
    }
    if matched.is_empty() {
        trail.push(String::from("no vulnerable function confirmed"));
    } else {
        trail.push(format!("functions confirmed: {}", matched.join(",")));
    }
    let (vuln_level, downgraded) = match classify_vulnerability_level(ev, entry, meta) {
        Ok(level) => (level, false),
        Err(RiskError::MissingReleaseDate { cve_id }) => {
            log::warn!(
                "{}: release date unknown for {cve_id}, MEDIUM rule downgraded to LOW",
                meta.apk_id
            );
            trail.push(String::from("release date unknown; downgraded to LOW"));
            (VulnLevel::Low, true)
        }
        Err(e) => return Err(e),
    };
    let mut level_note = format!("vuln {vuln_level}");
    if vuln_level == VulnLevel::Critical {
        level_note.push_str(" (symbol presence, reachability not checked)");
    }
    trail.push(level_note);

    let (score, severity, risk) = match entry.subscores() {
        Some((threat, impact)) => {
            let score = threat_impact_product(threat, impact)?;
            let severity = qualitative_severity(score)?;
            let risk = risk_matrix_lookup(severity, vuln_level);
            trail.push(format!("threat {threat} x impact {impact} = {score}"));
            trail.push(format!("severity {severity}"));
            trail.push(format!("matrix({severity}, {vuln_level}) = {risk}"));
            (Some(score), Some(severity), Some(risk))
        }
        None => {
            trail.push(String::from("subscores missing; UNSCORED"));
            (None, None, None)
        }
    };
    Ok(CveFinding {
        cve_id: entry.cve_id.clone(),
        product: entry.product.clone(),
        vuln_level,
        score,
        severity,
        risk,
        matched_functions: matched,
        rationale: trail.join("; "),
        downgraded,
    })
}

/// Highest risk over the scored findings. With none, LOW when the library
/// matched a tracked product and NONE otherwise.
pub fn library_risk(findings: &[CveFinding], product_matched: bool) -> RiskLevel {
    let floor = if product_matched {
        RiskLevel::Low
    } else {
        RiskLevel::None
    };
    findings
        .iter()
        .filter_map(|f| f.risk)
        .max()
        .map_or(floor, |m| m.max(floor))
}

/// Highest library risk; NONE for an app without native code.
pub fn app_risk(library_risks: &[RiskLevel]) -> RiskLevel {
    library_risks
        .iter()
        .copied()
        .max()
        .unwrap_or(RiskLevel::None)
}
