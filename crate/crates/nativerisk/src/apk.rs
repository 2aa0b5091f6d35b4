//! Opening APK archives and pulling native libraries out of them.

use std::fs::File;
use std::io::{self, BufReader, Read, Seek};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use nativerisk_core::apk::{abi_of_entry, parse_native_path};
use sha2::{Digest, Sha256};
use zip::result::ZipError;
use zip::ZipArchive;

#[derive(Debug, thiserror::Error)]
pub enum ApkError {
    #[error("{}: not a ZIP archive: {reason}", path.display())]
    NotAnArchive { path: PathBuf, reason: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApkEntry {
    pub path: String,
    /// Uncompressed size.
    pub size: u64,
    pub modified: Option<NaiveDate>,
}

/// An archive listing plus the file digest. Entries are not decompressed
/// until [`extract_native_libraries`] asks for them.
#[derive(Debug, Clone)]
pub struct ApkPackage {
    pub path: PathBuf,
    pub sha256: String,
    pub entries: Vec<ApkEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NativeLibraryBlob {
    pub archive_path: String,
    pub abi: String,
    pub file_name: String,
    pub bytes: Vec<u8>,
}

/// An entry that failed to decompress; the rest of the app is still scanned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptEntry {
    pub archive_path: String,
    pub reason: String,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ApkError + '_ {
    move |source| ApkError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn zip_err(path: &Path, e: ZipError) -> ApkError {
    match e {
        ZipError::Io(source) => ApkError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => ApkError::NotAnArchive {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

pub fn sha256_file(path: &Path) -> Result<String, ApkError> {
    let mut file = File::open(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    io::copy(&mut file, &mut hasher).map_err(io_err(path))?;
    Ok(hex::encode(hasher.finalize()))
}

fn open_archive(path: &Path) -> Result<ZipArchive<BufReader<File>>, ApkError> {
    let file = File::open(path).map_err(io_err(path))?;
    ZipArchive::new(BufReader::new(file)).map_err(|e| zip_err(path, e))
}

fn entry_date(dt: zip::DateTime) -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(dt.year().into(), dt.month().into(), dt.day().into())
}

pub fn open_apk(path: impl AsRef<Path>) -> Result<ApkPackage, ApkError> {
    let path = path.as_ref();
    let mut archive = open_archive(path)?;
    let mut entries = Vec::with_capacity(archive.len());
    for i in 0..archive.len() {
        let entry = archive.by_index_raw(i).map_err(|e| zip_err(path, e))?;
        if entry.is_dir() {
            continue;
        }
        entries.push(ApkEntry {
            path: entry.name().to_string(),
            size: entry.size(),
            modified: entry.last_modified().and_then(entry_date),
        });
    }
    if entries.is_empty() {
        return Err(ApkError::NotAnArchive {
            path: path.to_path_buf(),
            reason: "archive has no entries".into(),
        });
    }
    let sha256 = sha256_file(path)?;
    Ok(ApkPackage {
        path: path.to_path_buf(),
        sha256,
        entries,
    })
}

impl ApkPackage {
    /// ABI directories under `lib/`, in first-seen order.
    pub fn available_abis(&self) -> Vec<String> {
        let mut abis: Vec<String> = Vec::new();
        for e in &self.entries {
            if let Some(abi) = abi_of_entry(&e.path) {
                if !abis.iter().any(|a| a == abi) {
                    abis.push(abi.to_string());
                }
            }
        }
        abis
    }

    /// Anything at all under `lib/`.
    pub fn has_native_code(&self) -> bool {
        self.entries.iter().any(|e| abi_of_entry(&e.path).is_some())
    }

    /// Newest entry modification date, ignoring timestamps that predate
    /// Android (build tools often pin entries to 1980 or 1981).
    pub fn newest_entry_date(&self) -> Option<NaiveDate> {
        let android = NaiveDate::from_ymd_opt(2008, 9, 23)?;
        self.entries
            .iter()
            .filter_map(|e| e.modified)
            .filter(|d| *d >= android)
            .max()
    }
}

/// Decompresses every `lib/<abi>/*.so` entry in archive order. Entries that
/// fail to inflate or fail their CRC are returned as [`CorruptEntry`].
pub fn extract_native_libraries(
    apk: &ApkPackage,
    abi: &str,
) -> Result<(Vec<NativeLibraryBlob>, Vec<CorruptEntry>), ApkError> {
    let mut archive = open_archive(&apk.path)?;
    extract_from(&mut archive, abi)
}

fn extract_from<R: Read + Seek>(
    archive: &mut ZipArchive<R>,
    abi: &str,
) -> Result<(Vec<NativeLibraryBlob>, Vec<CorruptEntry>), ApkError> {
    let mut blobs = Vec::new();
    let mut corrupt = Vec::new();
    for i in 0..archive.len() {
        let name = match archive.name_for_index(i) {
            Some(n) => n.to_string(),
            None => continue,
        };
        let Some(native) = parse_native_path(&name) else {
            continue;
        };
        if native.abi != abi {
            continue;
        }
        let file_name = native.file_name.to_string();
        let mut bytes = Vec::new();
        let read = archive
            .by_index(i)
            .map_err(|e| e.to_string())
            .and_then(|mut f| f.read_to_end(&mut bytes).map_err(|e| e.to_string()));
        match read {
            Ok(_) => blobs.push(NativeLibraryBlob {
                archive_path: name,
                abi: abi.to_string(),
                file_name,
                bytes,
            }),
            Err(reason) => {
                log::warn!("corrupt entry {name}: {reason}");
                corrupt.push(CorruptEntry {
                    archive_path: name,
                    reason,
                });
            }
        }
    }
    Ok((blobs, corrupt))
}
