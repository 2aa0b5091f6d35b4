use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::mining::{
    detect_product, extract_function_names, extract_version_constraint, MiningOptions,
};
use super::{CveEntry, CveRaw, CvssVersion, Relation, VersionConstraint};
use crate::fingerprint::SignatureSet;
use crate::version::Version;

pub const DATABASE_FORMAT: &str = "nativerisk-cvedb";
pub const DATABASE_FORMAT_VERSION: u32 = 1;

/// Where an entry's version constraints came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VersionSource {
    /// Feed-provided product/version list.
    Structured,
    /// Mined from the description text.
    Description,
    /// Nothing found; the entry covers every version.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildOptions {
    pub mining: MiningOptions,
    /// Keep records that only carry CVSS v2 subscores.
    pub include_cvss_v2: bool,
}

/// Non-fatal things that happened while building; callers log them.
#[derive(Debug, Clone, PartialEq)]
pub enum BuildEvent {
    InvalidRecord {
        cve_id: String,
        reason: String,
    },
    SkippedUnscored {
        cve_id: String,
    },
    SkippedCvssV2 {
        cve_id: String,
    },
    /// One subscore missing; the entry is kept but cannot be scored.
    PartiallyScored {
        cve_id: String,
    },
    /// Structured versions replaced different description-mined ones.
    StructuredPreferred {
        cve_id: String,
        product: String,
        structured: Vec<VersionConstraint>,
        mined: Vec<VersionConstraint>,
    },
    ConflictingRelations {
        cve_id: String,
        product: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseHeader {
    pub format: String,
    pub format_version: u32,
    /// Newest publication date among the entries.
    pub built_at: Option<NaiveDate>,
    pub products: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("product `{0}` is not tracked by this database")]
    UnknownProduct(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CveDatabase {
    built_at: Option<NaiveDate>,
    products: Vec<String>,
    entries: Vec<CveEntry>,
    product_index: BTreeMap<String, Vec<usize>>,
}

impl CveDatabase {
    pub fn from_parts(header: DatabaseHeader, entries: Vec<CveEntry>) -> Self {
        let product_index = index_entries(&entries);
        Self {
            built_at: header.built_at,
            products: header.products,
            entries,
            product_index,
        }
    }

    pub fn header(&self) -> DatabaseHeader {
        DatabaseHeader {
            format: DATABASE_FORMAT.to_string(),
            format_version: DATABASE_FORMAT_VERSION,
            built_at: self.built_at,
            products: self.products.clone(),
        }
    }

    pub fn built_at(&self) -> Option<NaiveDate> {
        self.built_at
    }

    pub fn products(&self) -> &[String] {
        &self.products
    }

    pub fn entries(&self) -> &[CveEntry] {
        &self.entries
    }

    pub fn product_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.product_index
    }

    pub fn is_tracked(&self, product: &str) -> bool {
        self.products.iter().any(|p| p == product)
    }

    /// Entries for `product`. With a version, only entries whose constraints
    /// admit it (whole-product entries always do); without one, all of them.
    pub fn query(
        &self,
        product: &str,
        version: Option<&Version>,
    ) -> Result<Vec<&CveEntry>, QueryError> {
        if !self.is_tracked(product) {
            return Err(QueryError::UnknownProduct(product.to_string()));
        }
        let indices = self
            .product_index
            .get(product)
            .map_or(&[][..], Vec::as_slice);
        Ok(indices
            .iter()
            .map(|&i| &self.entries[i])
            .filter(|e| version.is_none_or(|v| e.admits(v)))
            .collect())
    }

    /// Entry count per tracked product, in product order.
    pub fn entry_counts(&self) -> Vec<(String, usize)> {
        self.products
            .iter()
            .map(|p| (p.clone(), self.product_index.get(p).map_or(0, Vec::len)))
            .collect()
    }
}

fn index_entries(entries: &[CveEntry]) -> BTreeMap<String, Vec<usize>> {
    let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        index.entry(e.product.clone()).or_default().push(i);
    }
    index
}

fn normalize_name(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| match c {
            '_' | ' ' => '-',
            c => c.to_ascii_lowercase(),
        })
        .collect()
}

fn products_for_listed(name: &str, sigs: &SignatureSet) -> Vec<String> {
    let wanted = normalize_name(name);
    sigs.iter()
        .filter(|sig| sig.names().any(|n| normalize_name(n) == wanted))
        .map(|sig| sig.product.clone())
        .collect()
}

fn has_conflicting_relations(constraints: &[VersionConstraint]) -> bool {
    let upper = constraints
        .iter()
        .any(|c| matches!(c.relation, Relation::AtMost | Relation::Before));
    let lower = constraints
        .iter()
        .any(|c| matches!(c.relation, Relation::AtLeast | Relation::After));
    upper && lower
}

/// Filters feed records to the tracked products and mines each one.
///
/// One entry per (record, product). Products come from the record's
/// structured list and from the description; for a product present in the
/// structured list with versions, those versions win over mined ones.
/// Records without any subscore are dropped. Output order follows the
/// input, then signature order, so rebuilding is deterministic.
pub fn build_database(
    raw: &[CveRaw],
    sigs: &SignatureSet,
    opts: BuildOptions,
) -> (CveDatabase, Vec<BuildEvent>) {
    let mut events = Vec::new();
    let mut entries = Vec::new();
    for record in raw {
        if let Err(e) = record.validate() {
            events.push(BuildEvent::InvalidRecord {
                cve_id: record.cve_id.clone(),
                reason: e.to_string(),
            });
            continue;
        }
        if record.exploitability.is_none() && record.impact.is_none() {
            events.push(BuildEvent::SkippedUnscored {
                cve_id: record.cve_id.clone(),
            });
            continue;
        }
        if record.cvss_version == Some(CvssVersion::V2) && !opts.include_cvss_v2 {
            events.push(BuildEvent::SkippedCvssV2 {
                cve_id: record.cve_id.clone(),
            });
            continue;
        }

        let mut structured: BTreeMap<String, Vec<VersionConstraint>> = BTreeMap::new();
        for listed in &record.listed_products {
            for product in products_for_listed(&listed.name, sigs) {
                let slot = structured.entry(product).or_default();
                for c in &listed.constraints {
                    if !slot.contains(c) {
                        slot.push(c.clone());
                    }
                }
            }
        }
        let detected = detect_product(&record.description, sigs);
        let products: Vec<&str> = sigs
            .iter()
            .map(|s| s.product.as_str())
            .filter(|p| structured.contains_key(*p) || detected.iter().any(|d| d == p))
            .collect();
        if products.is_empty() {
            continue;
        }
        if !record.is_scored() {
            events.push(BuildEvent::PartiallyScored {
                cve_id: record.cve_id.clone(),
            });
        }

        let mined = extract_version_constraint(&record.description, opts.mining);
        let mut functions: Vec<String> = Vec::new();
        for f in record
            .functions
            .iter()
            .cloned()
            .chain(extract_function_names(&record.description))
        {
            if !functions.contains(&f) {
                functions.push(f);
            }
        }

        for product in products {
            let (constraints, version_source) = match structured.get(product) {
                Some(listed) if !listed.is_empty() => {
                    if !mined.is_empty() && &mined != listed {
                        events.push(BuildEvent::StructuredPreferred {
                            cve_id: record.cve_id.clone(),
                            product: product.to_string(),
                            structured: listed.clone(),
                            mined: mined.clone(),
                        });
                    }
                    (listed.clone(), VersionSource::Structured)
                }
                _ if mined.is_empty() => (Vec::new(), VersionSource::None),
                _ => (mined.clone(), VersionSource::Description),
            };
            let needs_review = version_source == VersionSource::Description
                && has_conflicting_relations(&constraints);
            if needs_review {
                events.push(BuildEvent::ConflictingRelations {
                    cve_id: record.cve_id.clone(),
                    product: product.to_string(),
                });
            }
            entries.push(CveEntry {
                cve_id: record.cve_id.clone(),
                product: product.to_string(),
                constraints,
                functions: functions.clone(),
                published: record.published,
                exploitability: record.exploitability,
                impact: record.impact,
                cvss_version: record.cvss_version,
                version_source,
                needs_review,
            });
        }
    }
    let built_at = entries.iter().map(|e| e.published).max();
    let header = DatabaseHeader {
        format: DATABASE_FORMAT.to_string(),
        format_version: DATABASE_FORMAT_VERSION,
        built_at,
        products: sigs.products(),
    };
    (CveDatabase::from_parts(header, entries), events)
}
