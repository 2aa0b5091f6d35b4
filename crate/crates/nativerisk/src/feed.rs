//! CVE feed readers: NVD JSON 1.1 year feeds, NVD API 2.0 responses and a
//! simplified JSONL mirror, all mapped to [`CveRaw`].
//!
//! Mirror records, one JSON object per line:
//!
//! ```json
//! {"cve_id": "CVE-2019-7317", "description": "...", "published": "2019-02-04",
//!  "cvss_version": "3.1", "exploitability": 2.8, "impact": 2.7,
//!  "products": [{"name": "libpng", "constraints": [{"relation": "at_most", "version": "1.6.36"}]}],
//!  "functions": ["png_image_free"]}
//! ```
//!
//! `cvss_version`, `products` and `functions` are optional; a missing or
//! null subscore is kept as absent.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use nativerisk_core::cve::{CveRaw, CvssVersion, ListedProduct, Relation, VersionConstraint};
use nativerisk_core::version::Version;
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum FeedError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: unrecognized feed format: {reason}", path.display())]
    UnrecognizedFeedFormat { path: PathBuf, reason: String },
}

/// A record that was dropped while reading; the rest of the feed loads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    /// 1-based record number (line number for JSONL).
    pub position: usize,
    pub cve_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedFormat {
    Nvd11,
    NvdApi2,
    Jsonl,
}

pub fn ingest_feed(path: impl AsRef<Path>) -> Result<(Vec<CveRaw>, Vec<SkippedRecord>), FeedError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FeedError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_feed(&text).map_err(|reason| FeedError::UnrecognizedFeedFormat {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn detect_format(text: &str) -> Result<FeedFormat, String> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or("empty feed")?;
    if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(first) {
        if obj.contains_key("cve_id") {
            return Ok(FeedFormat::Jsonl);
        }
    }
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(doc)) if doc.contains_key("CVE_Items") => Ok(FeedFormat::Nvd11),
        Ok(Value::Object(doc)) if doc.contains_key("vulnerabilities") => Ok(FeedFormat::NvdApi2),
        Ok(_) => Err("JSON document has neither `CVE_Items` nor `vulnerabilities`".into()),
        Err(e) => Err(format!("neither a JSON document nor JSONL records: {e}")),
    }
}

/// Parses any supported feed; the error string explains why the text was
/// not recognized at all.
pub fn parse_feed(text: &str) -> Result<(Vec<CveRaw>, Vec<SkippedRecord>), String> {
    let format = detect_format(text)?;
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    let mut push = |position: usize, result: Result<CveRaw, (Option<String>, String)>| match result
    {
        Ok(raw) => match raw.validate() {
            Ok(()) => records.push(raw),
            Err(e) => skipped.push(SkippedRecord {
                position,
                cve_id: Some(raw.cve_id),
                reason: e.to_string(),
            }),
        },
        Err((cve_id, reason)) => skipped.push(SkippedRecord {
            position,
            cve_id,
            reason,
        }),
    };
    match format {
        FeedFormat::Jsonl => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                push(i + 1, mirror_record(line));
            }
        }
        FeedFormat::Nvd11 | FeedFormat::NvdApi2 => {
            let doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
            let (key, parse): (&str, fn(&Value) -> RecordResult) = match format {
                FeedFormat::Nvd11 => ("CVE_Items", nvd11_record),
                _ => ("vulnerabilities", nvd2_record),
            };
            let items = doc[key]
                .as_array()
                .ok_or_else(|| format!("`{key}` is not an array"))?;
            for (i, item) in items.iter().enumerate() {
                push(i + 1, parse(item));
            }
        }
    }
    Ok((records, skipped))
}

/// A parsed record, or the CVE id (when readable) and why it was skipped.
type RecordResult = Result<CveRaw, (Option<String>, String)>;

#[derive(Deserialize)]
struct MirrorRecord {
    cve_id: String,
    description: String,
    published: String,
    #[serde(default)]
    cvss_version: Option<CvssVersion>,
    #[serde(default)]
    exploitability: Option<f64>,
    #[serde(default)]
    impact: Option<f64>,
    #[serde(default)]
    products: Vec<ListedProduct>,
    #[serde(default)]
    functions: Vec<String>,
}

fn mirror_record(line: &str) -> RecordResult {
    let r: MirrorRecord = serde_json::from_str(line).map_err(|e| {
        let id = serde_json::from_str::<Value>(line)
            .ok()
            .and_then(|v| v["cve_id"].as_str().map(str::to_string));
        (id, e.to_string())
    })?;
    let published = parse_published(&r.published)
        .ok_or_else(|| (Some(r.cve_id.clone()), "bad published date".into()))?;
    Ok(CveRaw {
        cve_id: r.cve_id,
        description: r.description,
        published,
        cvss_version: r.cvss_version.or(Some(CvssVersion::V31)),
        exploitability: r.exploitability,
        impact: r.impact,
        listed_products: r.products,
        functions: r.functions,
    })
}

/// NVD writes `2014-04-07T22:55Z` (1.1) and `2014-04-07T22:55:03.893` (2.0).
fn parse_published(raw: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(raw.get(..10)?, "%Y-%m-%d").ok()
}

fn english(descriptions: &Value, text_key: &str) -> Option<String> {
    let list = descriptions.as_array()?;
    list.iter()
        .find(|d| d["lang"] == "en")
        .or_else(|| list.first())
        .and_then(|d| d[text_key].as_str())
        .map(str::to_string)
}

fn cvss_version_of(raw: &Value) -> Option<CvssVersion> {
    match raw.as_str()? {
        "3.1" => Some(CvssVersion::V31),
        "3.0" => Some(CvssVersion::V30),
        "2.0" => Some(CvssVersion::V2),
        _ => None,
    }
}

fn nvd11_record(item: &Value) -> RecordResult {
    let cve_id = item["cve"]["CVE_data_meta"]["ID"]
        .as_str()
        .ok_or((None, "missing CVE_data_meta.ID".into()))?
        .to_string();
    let fail = |reason: &str| (Some(cve_id.clone()), reason.to_string());
    let description = english(&item["cve"]["description"]["description_data"], "value")
        .ok_or_else(|| fail("missing description"))?;
    let published = item["publishedDate"]
        .as_str()
        .and_then(parse_published)
        .ok_or_else(|| fail("bad publishedDate"))?;
    let v3 = &item["impact"]["baseMetricV3"];
    let v2 = &item["impact"]["baseMetricV2"];
    let (cvss_version, exploitability, impact) = if v3.is_object() {
        (
            cvss_version_of(&v3["cvssV3"]["version"]).or(Some(CvssVersion::V31)),
            v3["exploitabilityScore"].as_f64(),
            v3["impactScore"].as_f64(),
        )
    } else if v2.is_object() {
        (
            Some(CvssVersion::V2),
            v2["exploitabilityScore"].as_f64(),
            v2["impactScore"].as_f64(),
        )
    } else {
        (None, None, None)
    };
    let mut listed = Vec::new();
    collect_cpe_matches(
        &item["configurations"]["nodes"],
        "cpe_match",
        "cpe23Uri",
        &mut listed,
    );
    Ok(CveRaw {
        cve_id,
        description,
        published,
        cvss_version,
        exploitability,
        impact,
        listed_products: listed,
        functions: Vec::new(),
    })
}

fn nvd2_record(item: &Value) -> RecordResult {
    let cve = &item["cve"];
    let cve_id = cve["id"]
        .as_str()
        .ok_or((None, "missing cve.id".into()))?
        .to_string();
    let fail = |reason: &str| (Some(cve_id.clone()), reason.to_string());
    let description =
        english(&cve["descriptions"], "value").ok_or_else(|| fail("missing description"))?;
    let published = cve["published"]
        .as_str()
        .and_then(parse_published)
        .ok_or_else(|| fail("bad published"))?;
    let metrics = &cve["metrics"];
    let pick = |key: &str| -> Option<&Value> {
        let list = metrics[key].as_array()?;
        list.iter()
            .find(|m| m["type"] == "Primary")
            .or_else(|| list.first())
    };
    let (cvss_version, exploitability, impact) =
        match pick("cvssMetricV31").or_else(|| pick("cvssMetricV30")) {
            Some(m) => (
                cvss_version_of(&m["cvssData"]["version"]).or(Some(CvssVersion::V31)),
                m["exploitabilityScore"].as_f64(),
                m["impactScore"].as_f64(),
            ),
            None => match pick("cvssMetricV2") {
                Some(m) => (
                    Some(CvssVersion::V2),
                    m["exploitabilityScore"].as_f64(),
                    m["impactScore"].as_f64(),
                ),
                None => (None, None, None),
            },
        };
    let mut listed = Vec::new();
    if let Some(configs) = cve["configurations"].as_array() {
        for config in configs {
            collect_cpe_matches(&config["nodes"], "cpeMatch", "criteria", &mut listed);
        }
    }
    Ok(CveRaw {
        cve_id,
        description,
        published,
        cvss_version,
        exploitability,
        impact,
        listed_products: listed,
        functions: Vec::new(),
    })
}

fn collect_cpe_matches(
    nodes: &Value,
    match_key: &str,
    uri_key: &str,
    out: &mut Vec<ListedProduct>,
) {
    let Some(nodes) = nodes.as_array() else {
        return;
    };
    for node in nodes {
        if let Some(matches) = node[match_key].as_array() {
            for m in matches {
                if m["vulnerable"] == false {
                    continue;
                }
                let Some(uri) = m[uri_key].as_str() else {
                    continue;
                };
                if let Some((name, constraints)) = cpe_constraints(uri, m) {
                    match out.iter_mut().find(|p| p.name == name) {
                        Some(p) => {
                            for c in constraints {
                                if !p.constraints.contains(&c) {
                                    p.constraints.push(c);
                                }
                            }
                        }
                        None => out.push(ListedProduct { name, constraints }),
                    }
                }
            }
        }
        collect_cpe_matches(&node["children"], match_key, uri_key, out);
    }
}

/// Product name and constraints of one CPE match. An end bound wins over a
/// start bound; ranges lose their lower end since entry constraints are
/// alternatives, not conjunctions.
fn cpe_constraints(uri: &str, m: &Value) -> Option<(String, Vec<VersionConstraint>)> {
    let parts: Vec<&str> = uri.split(':').collect();
    if parts.len() < 6 || parts[0] != "cpe" {
        return None;
    }
    let name = parts[4].replace("\\", "");
    let bound = |key: &str| m[key].as_str().and_then(|v| v.parse::<Version>().ok());
    let constraint = if let Some(v) = bound("versionEndExcluding") {
        Some(VersionConstraint::new(Relation::Before, v))
    } else if let Some(v) = bound("versionEndIncluding") {
        Some(VersionConstraint::new(Relation::AtMost, v))
    } else if let Some(v) = bound("versionStartIncluding") {
        Some(VersionConstraint::new(Relation::AtLeast, v))
    } else if let Some(v) = bound("versionStartExcluding") {
        Some(VersionConstraint::new(Relation::After, v))
    } else {
        match parts[5] {
            "*" | "-" | "" => None,
            v => v
                .parse::<Version>()
                .ok()
                .map(|v| VersionConstraint::new(Relation::Exactly, v)),
        }
    };
    Some((name, constraint.into_iter().collect()))
}
