//! APK-level concepts that do not need file access: ABI preference,
//! native library paths and app metadata.

use alloc::string::String;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// ABI directories scanned, most preferred first.
pub const PREFERRED_ABIS: [&str; 3] = ["armeabi-v7a", "arm64-v8a", "x86_64"];

/// Picks the first ABI of [`PREFERRED_ABIS`] present in `available`.
///
/// Other ABIs (`x86`, `mips`, `armeabi`) never qualify, even when they are
/// the only ones shipped.
pub fn select_abi<S: AsRef<str>>(available: &[S]) -> Option<&'static str> {
    PREFERRED_ABIS
        .iter()
        .copied()
        .find(|abi| available.iter().any(|a| a.as_ref() == *abi))
}

/// A `lib/<abi>/<file>.so` archive path split into its ABI and file name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NativePath<'a> {
    pub abi: &'a str,
    pub file_name: &'a str,
}

/// Recognizes native library entries. Nested directories below the ABI
/// directory are not loaded by the Android package manager and are ignored.
pub fn parse_native_path(path: &str) -> Option<NativePath<'_>> {
    let rest = path.strip_prefix("lib/")?;
    let (abi, file_name) = rest.split_once('/')?;
    if abi.is_empty()
        || file_name.contains('/')
        || !file_name.ends_with(".so")
        || file_name.len() <= 3
    {
        return None;
    }
    Some(NativePath { abi, file_name })
}

/// The ABI directory of any `lib/<abi>/...` entry, used to list what an APK ships.
pub fn abi_of_entry(path: &str) -> Option<&str> {
    let rest = path.strip_prefix("lib/")?;
    let (abi, tail) = rest.split_once('/')?;
    (!abi.is_empty() && !tail.is_empty()).then_some(abi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReleaseDateSource {
    /// From the metadata sidecar table.
    Sidecar,
    /// Newest modification time among archive entries; low confidence.
    ArchiveTimestamp,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppMetadata {
    /// SHA-256 of the APK file, lowercase hex.
    pub apk_id: String,
    pub release_date: Option<NaiveDate>,
    pub release_date_source: ReleaseDateSource,
    pub market: Option<String>,
}

impl AppMetadata {
    pub fn new(apk_id: impl Into<String>) -> Self {
        Self {
            apk_id: apk_id.into(),
            release_date: None,
            release_date_source: ReleaseDateSource::Unknown,
            market: None,
        }
    }

    pub fn with_release_date(mut self, date: NaiveDate, source: ReleaseDateSource) -> Self {
        self.release_date = Some(date);
        self.release_date_source = source;
        self
    }

    pub fn with_market(mut self, market: impl Into<String>) -> Self {
        self.market = Some(market.into());
        self
    }
}

/// True for exactly 64 lowercase hex digits.
pub fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn prefers_armeabi_v7a() {
        assert_eq!(
            select_abi(&["arm64-v8a", "armeabi-v7a"]),
            Some("armeabi-v7a")
        );
    }

    #[test]
    fn falls_back_to_x86_64() {
        assert_eq!(select_abi(&["x86_64"]), Some("x86_64"));
        assert_eq!(
            select_abi(&["x86", "x86_64", "arm64-v8a"]),
            Some("arm64-v8a")
        );
    }

    #[test]
    fn ignores_other_abis() {
        assert_eq!(select_abi(&["mips"]), None);
        assert_eq!(select_abi(&["x86", "armeabi"]), None);
        assert_eq!(select_abi::<&str>(&[]), None);
    }

    #[test]
    fn native_paths() {
        let p = parse_native_path("lib/armeabi-v7a/libfoo.so").unwrap();
        assert_eq!(p.abi, "armeabi-v7a");
        assert_eq!(p.file_name, "libfoo.so");
        assert!(parse_native_path("lib/armeabi-v7a/sub/libfoo.so").is_none());
        assert!(parse_native_path("lib/libfoo.so").is_none());
        assert!(parse_native_path("assets/lib/x86/libfoo.so").is_none());
        assert!(parse_native_path("lib/x86/libfoo.txt").is_none());
        assert_eq!(abi_of_entry("lib/mips/libbar.so"), Some("mips"));
        assert_eq!(abi_of_entry("classes.dex"), None);
    }

    #[test]
    fn sha256_shape() {
        assert!(is_sha256_hex(&"ab".repeat(32)));
        assert!(!is_sha256_hex(&"AB".repeat(32)));
        assert!(!is_sha256_hex("abc"));
    }

    proptest! {
        #[test]
        fn select_abi_returns_member(set in proptest::collection::vec(
            prop_oneof![
                Just("armeabi-v7a".to_string()),
                Just("arm64-v8a".to_string()),
                Just("x86_64".to_string()),
                Just("x86".to_string()),
                Just("mips".to_string()),
                "[a-z0-9_-]{1,12}",
            ],
            0..6,
        )) {
            let picked = select_abi(&set);
            let again = select_abi(&set);
            prop_assert_eq!(picked, again);
            if let Some(abi) = picked {
                prop_assert!(set.iter().any(|s| s == abi));
                let rank = PREFERRED_ABIS.iter().position(|a| *a == abi).unwrap();
                for better in &PREFERRED_ABIS[..rank] {
                    prop_assert!(!set.iter().any(|s| s == better));
                }
            } else {
                let preferred: Vec<_> = set.iter().filter(|s| PREFERRED_ABIS.contains(&s.as_str())).collect();
                prop_assert!(preferred.is_empty());
            }
        }
    }
}
