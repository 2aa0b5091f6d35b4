//! On-disk CVE database: a JSON header line followed by one entry per line.

use std::io::{self, BufRead, Write};
use std::path::Path;

use nativerisk_core::cve::{CveDatabase, CveEntry, DatabaseHeader, DATABASE_FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum DbFileError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("database line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("database file is empty")]
    MissingHeader,
    #[error("not a {DATABASE_FORMAT} file (format `{0}`)")]
    BadFormat(String),
}

pub fn write_database<W: Write>(db: &CveDatabase, mut out: W) -> io::Result<()> {
    serde_json::to_writer(&mut out, &db.header())?;
    out.write_all(b"\n")?;
    for entry in db.entries() {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_bytes(db: &CveDatabase) -> Vec<u8> {
    let mut buf = Vec::new();
    write_database(db, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_database<R: BufRead>(reader: R) -> Result<CveDatabase, DbFileError> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or(DbFileError::MissingHeader)?;
    let header: DatabaseHeader =
        serde_json::from_str(&header?).map_err(|source| DbFileError::Parse { line: 1, source })?;
    if header.format != DATABASE_FORMAT {
        return Err(DbFileError::BadFormat(header.format));
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CveEntry = serde_json::from_str(&line).map_err(|source| DbFileError::Parse {
            line: i + 1,
            source,
        })?;
        entries.push(entry);
    }
    Ok(CveDatabase::from_parts(header, entries))
}

pub fn load_database(path: &Path) -> Result<CveDatabase, DbFileError> {
    read_database(io::BufReader::new(std::fs::File::open(path)?))
}

pub fn save_database(db: &CveDatabase, path: &Path) -> io::Result<()> {
    std::fs::write(path, to_bytes(db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nativerisk_core::cve::{
        build_database, BuildOptions, CveRaw, CvssVersion, ListedProduct, Relation,
        VersionConstraint,
    };
    use nativerisk_core::fingerprint::SignatureSet;
    use proptest::prelude::*;

    fn raw(id: &str, desc: &str, e: Option<f64>, i: Option<f64>) -> CveRaw {
        CveRaw {
            cve_id: id.into(),
            description: desc.into(),
            published: chrono::NaiveDate::from_ymd_opt(2020, 2, 29).unwrap(),
            cvss_version: Some(CvssVersion::V31),
            exploitability: e,
            impact: i,
            listed_products: Vec::new(),
            functions: Vec::new(),
        }
    }

    #[test]
    fn round_trip() {
        let mut r = raw(
            "CVE-2020-0001",
            "libwebp before 1.0.1 in WebPDecode()",
            Some(2.8),
            Some(5.9),
        );
        r.listed_products.push(ListedProduct {
            name: "libwebp".into(),
            constraints: vec![VersionConstraint::new(
                Relation::Before,
                "1.0.1".parse().unwrap(),
            )],
        });
        let records = [
            r,
            raw(
                "CVE-2020-0002",
                "Lua 5.4.0 crash in luaV_execute",
                Some(1.8),
                None,
            ),
        ];
        let (db, _) = build_database(
            &records,
            &SignatureSet::default_set(),
            BuildOptions::default(),
        );
        let bytes = to_bytes(&db);
        let back = read_database(bytes.as_slice()).unwrap();
        assert_eq!(back, db);
        assert_eq!(to_bytes(&back), bytes);
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with(
            r#"{"format":"nativerisk-cvedb","format_version":1,"built_at":"2020-02-29""#
        ));
    }

    #[test]
    fn bad_files() {
        assert!(matches!(
            read_database(&b""[..]),
            Err(DbFileError::MissingHeader)
        ));
        assert!(matches!(
            read_database(&b"{}\n"[..]),
            Err(DbFileError::Parse { line: 1, .. })
        ));
        let other = br#"{"format":"x","format_version":1,"built_at":null,"products":[]}"#;
        assert!(matches!(
            read_database(&other[..]),
            Err(DbFileError::BadFormat(_))
        ));
    }

    proptest! {
        #[test]
        fn subscores_survive_bit_exact(e in 0.0f64..=10.0, i in 0.0f64..=10.0) {
            let (db, _) = build_database(
                &[raw("CVE-2021-1234", "OpenSSL 1.1.1 before 1.1.1k", Some(e), Some(i))],
                &SignatureSet::default_set(),
                BuildOptions::default(),
            );
            let back = read_database(to_bytes(&db).as_slice()).unwrap();
            prop_assert_eq!(back.entries()[0].exploitability.unwrap().to_bits(), e.to_bits());
            prop_assert_eq!(back.entries()[0].impact.unwrap().to_bits(), i.to_bits());
        }
    }
}
