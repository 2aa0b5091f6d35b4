//! Sidecar metadata table (`sha256,dex_date,market`) and app metadata.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use nativerisk_core::apk::{is_sha256_hex, AppMetadata, ReleaseDateSource};

use crate::apk::ApkPackage;

#[derive(Debug, thiserror::Error)]
pub enum SidecarError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("sidecar: {0}")]
    Csv(#[from] csv::Error),
    #[error("sidecar header lacks column `{0}`")]
    MissingColumn(&'static str),
}

/// A row that could not be used; it is skipped and the rest load.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("sidecar line {line}: {reason}")]
pub struct MalformedSidecarRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SidecarRow {
    pub release_date: Option<NaiveDate>,
    pub market: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Sidecar {
    rows: HashMap<String, SidecarRow>,
}

impl Sidecar {
    pub fn get(&self, sha256: &str) -> Option<&SidecarRow> {
        self.rows.get(sha256)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `YYYY-MM-DD`, optionally followed by a time part (Androzoo writes
/// `2019-03-01 12:00:00`).
fn parse_date(raw: &str) -> Option<NaiveDate> {
    let day = raw.get(..10)?;
    let rest = &raw[10..];
    if !(rest.is_empty() || rest.starts_with(' ') || rest.starts_with('T')) {
        return None;
    }
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

/// Reads the sidecar table. Dates after `today` count as malformed.
pub fn read_sidecar<R: Read>(
    reader: R,
    today: NaiveDate,
) -> Result<(Sidecar, Vec<MalformedSidecarRow>), SidecarError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(SidecarError::MissingColumn(name))
    };
    let (sha_col, date_col, market_col) = (col("sha256")?, col("dex_date")?, col("market")?);

    let mut sidecar = Sidecar::default();
    let mut malformed = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| MalformedSidecarRow { line, reason };
        let sha = record.get(sha_col).unwrap_or("").to_ascii_lowercase();
        if !is_sha256_hex(&sha) {
            malformed.push(bad(format!("bad sha256 `{sha}`")));
            continue;
        }
        let raw_date = record.get(date_col).unwrap_or("");
        let release_date = if raw_date.is_empty() {
            None
        } else {
            match parse_date(raw_date) {
                Some(d) if d <= today => Some(d),
                Some(d) => {
                    malformed.push(bad(format!("date {d} is in the future")));
                    continue;
                }
                None => {
                    malformed.push(bad(format!("unparseable date `{raw_date}`")));
                    continue;
                }
            }
        };
        let market = record
            .get(market_col)
            .filter(|m| !m.is_empty())
            .map(str::to_string);
        sidecar.rows.insert(
            sha,
            SidecarRow {
                release_date,
                market,
            },
        );
    }
    Ok((sidecar, malformed))
}

pub fn load_sidecar(
    path: &Path,
    today: NaiveDate,
) -> Result<(Sidecar, Vec<MalformedSidecarRow>), SidecarError> {
    let file = std::fs::File::open(path).map_err(|source| SidecarError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_sidecar(file, today)
}

/// Sidecar values first; without a sidecar date, the newest plausible
/// archive entry date, flagged as such.
pub fn load_metadata(apk: &ApkPackage, sidecar: Option<&Sidecar>, today: NaiveDate) -> AppMetadata {
    let mut meta = AppMetadata::new(apk.sha256.clone());
    let row = sidecar.and_then(|s| s.get(&apk.sha256));
    if let Some(market) = row.and_then(|r| r.market.clone()) {
        meta = meta.with_market(market);
    }
    if let Some(date) = row.and_then(|r| r.release_date) {
        meta = meta.with_release_date(date, ReleaseDateSource::Sidecar);
    } else if let Some(date) = apk.newest_entry_date().filter(|d| *d <= today) {
        meta = meta.with_release_date(date, ReleaseDateSource::ArchiveTimestamp);
    }
    meta
}
