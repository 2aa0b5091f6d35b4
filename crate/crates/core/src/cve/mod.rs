//! The purpose-built CVE database: raw feed records, mined version
//! constraints and function names, and per-product lookup.

mod db;
mod mining;

pub use db::{
    build_database, BuildEvent, BuildOptions, CveDatabase, DatabaseHeader, QueryError,
    VersionSource, DATABASE_FORMAT, DATABASE_FORMAT_VERSION,
};
pub use mining::{
    detect_product, extract_function_names, extract_version_constraint, mentions, MiningOptions,
    DEFAULT_WINDOW,
};

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::version::{compare_versions, Version};

/// `CVE-<year>-<sequence>` with a four-digit year and at least four
/// sequence digits.
pub fn is_cve_id(id: &str) -> bool {
    let Some(rest) = id.strip_prefix("CVE-") else {
        return false;
    };
    let Some((year, seq)) = rest.split_once('-') else {
        return false;
    };
    year.len() == 4
        && year.bytes().all(|b| b.is_ascii_digit())
        && seq.len() >= 4
        && seq.bytes().all(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CvssVersion {
    #[serde(rename = "2.0")]
    V2,
    #[serde(rename = "3.0")]
    V30,
    #[serde(rename = "3.1")]
    V31,
}

impl CvssVersion {
    pub fn is_v3(self) -> bool {
        matches!(self, Self::V30 | Self::V31)
    }
}

/// How an affected-version bound relates to the queried version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `<= v`
    AtMost,
    /// `< v`
    Before,
    /// `== v`
    Exactly,
    /// `>= v`
    AtLeast,
    /// `> v`
    After,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::AtMost => "at_most",
            Relation::Before => "before",
            Relation::Exactly => "exactly",
            Relation::AtLeast => "at_least",
            Relation::After => "after",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionConstraint {
    pub relation: Relation,
    pub version: Version,
}

impl VersionConstraint {
    pub fn new(relation: Relation, version: Version) -> Self {
        Self { relation, version }
    }

    pub fn admits(&self, candidate: &Version) -> bool {
        let ord = compare_versions(candidate, &self.version);
        match self.relation {
            Relation::AtMost => ord != Ordering::Greater,
            Relation::Before => ord == Ordering::Less,
            Relation::Exactly => ord == Ordering::Equal,
            Relation::AtLeast => ord != Ordering::Less,
            Relation::After => ord == Ordering::Greater,
        }
    }
}

impl fmt::Display for VersionConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.relation.as_str(), self.version)
    }
}

/// Structured product entry from a feed (CPE match or mirror `products[]`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListedProduct {
    pub name: String,
    #[serde(default)]
    pub constraints: Vec<VersionConstraint>,
}

/// One feed record before product filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveRaw {
    pub cve_id: String,
    pub description: String,
    pub published: NaiveDate,
    pub cvss_version: Option<CvssVersion>,
    pub exploitability: Option<f64>,
    pub impact: Option<f64>,
    #[serde(default)]
    pub listed_products: Vec<ListedProduct>,
    /// Curated vulnerable function names carried by the record itself.
    #[serde(default)]
    pub functions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RawRecordError {
    #[error("invalid CVE identifier `{0}`")]
    BadId(String),
    #[error("{field} subscore {value} outside [0, 10]")]
    SubscoreRange { field: &'static str, value: String },
}

impl CveRaw {
    pub fn validate(&self) -> Result<(), RawRecordError> {
        if !is_cve_id(&self.cve_id) {
            return Err(RawRecordError::BadId(self.cve_id.clone()));
        }
        for (field, value) in [
            ("exploitability", self.exploitability),
            ("impact", self.impact),
        ] {
            if let Some(v) = value {
                if !(0.0..=10.0).contains(&v) {
                    return Err(RawRecordError::SubscoreRange {
                        field,
                        value: v.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Both subscores present.
    pub fn is_scored(&self) -> bool {
        self.exploitability.is_some() && self.impact.is_some()
    }
}

/// One (CVE, product) pair of the database.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveEntry {
    pub cve_id: String,
    pub product: String,
    /// Alternatives: a version is affected if any constraint admits it.
    /// Empty means the whole product is affected.
    pub constraints: Vec<VersionConstraint>,
    pub functions: Vec<String>,
    pub published: NaiveDate,
    pub exploitability: Option<f64>,
    pub impact: Option<f64>,
    pub cvss_version: Option<CvssVersion>,
    pub version_source: VersionSource,
    /// Set when the mined constraints disagree in direction.
    #[serde(default)]
    pub needs_review: bool,
}

impl CveEntry {
    pub fn admits(&self, version: &Version) -> bool {
        self.constraints.is_empty() || self.constraints.iter().any(|c| c.admits(version))
    }

    pub fn subscores(&self) -> Option<(f64, f64)> {
        Some((self.exploitability?, self.impact?))
    }
}
