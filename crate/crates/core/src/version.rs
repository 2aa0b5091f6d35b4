//! Dotted numeric versions with an optional trailing letter suffix
//! (`1.0.2k`, `4.1.0`, `58.54.100`).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::hash::{Hash, Hasher};
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VersionError {
    #[error("empty version")]
    Empty,
    #[error("invalid version `{0}`")]
    Invalid(String),
}

/// A library version as it appears in banners and CVE descriptions.
///
/// Equality and ordering follow [`compare_versions`]: `1.2` and `1.2.0`
/// are the same version even though they render differently.
#[derive(Debug, Clone)]
pub struct Version {
    segments: Vec<u64>,
    suffix: Option<String>,
}

impl Version {
    pub fn new(segments: Vec<u64>, suffix: Option<String>) -> Result<Self, VersionError> {
        if segments.is_empty() {
            return Err(VersionError::Empty);
        }
        if let Some(s) = &suffix {
            if !valid_suffix(s) {
                return Err(VersionError::Invalid(s.clone()));
            }
        }
        Ok(Self { segments, suffix })
    }

    pub fn segments(&self) -> &[u64] {
        &self.segments
    }

    pub fn suffix(&self) -> Option<&str> {
        self.suffix.as_deref()
    }

    /// Parses the longest version token at the start of `text`.
    ///
    /// A token needs at least two numeric segments (`5.4`, not `5`) so that
    /// years and counts are not mistaken for versions. Returns the version
    /// and the number of bytes consumed. A trailing `.x`-style wildcard
    /// (`3.0.x`) rejects the whole token.
    pub fn scan_prefix(text: &str) -> Option<(Version, usize)> {
        let bytes = text.as_bytes();
        let mut pos = 0;
        let mut segments = Vec::new();
        loop {
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            if pos == start {
                // "1." followed by a non-digit: back off the dot
                if segments.is_empty() {
                    return None;
                }
                pos -= 1;
                if bytes.get(pos + 1).is_some_and(|b| b.is_ascii_alphabetic()) {
                    // wildcard branch such as `3.0.x`
                    return None;
                }
                break;
            }
            segments.push(text[start..pos].parse::<u64>().ok()?);
            if pos < bytes.len() && bytes[pos] == b'.' {
                pos += 1;
                continue;
            }
            break;
        }
        if segments.len() < 2 {
            return None;
        }
        let suffix_start = pos;
        if pos < bytes.len() && bytes[pos].is_ascii_alphabetic() {
            while pos < bytes.len() && bytes[pos].is_ascii_alphanumeric() {
                pos += 1;
            }
        }
        let suffix = (pos > suffix_start).then(|| text[suffix_start..pos].to_string());
        // `1.2.3foo.4` is not a version
        if suffix.is_some()
            && bytes.get(pos) == Some(&b'.')
            && bytes.get(pos + 1).is_some_and(u8::is_ascii_alphanumeric)
        {
            return None;
        }
        Some((Version { segments, suffix }, pos))
    }
}

fn valid_suffix(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric())
}

/// Segment-wise numeric comparison, missing segments read as zero; ties are
/// broken by the suffix, where no suffix sorts first and suffixes compare
/// lexicographically (`1.0.2 < 1.0.2a < 1.0.2z < 1.0.2za`).
pub fn compare_versions(a: &Version, b: &Version) -> Ordering {
    let len = a.segments.len().max(b.segments.len());
    for i in 0..len {
        let x = a.segments.get(i).copied().unwrap_or(0);
        let y = b.segments.get(i).copied().unwrap_or(0);
        match x.cmp(&y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    match (&a.suffix, &b.suffix) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.cmp(y),
    }
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        compare_versions(self, other) == Ordering::Equal
    }
}

impl Eq for Version {}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_versions(self, other)
    }
}

impl Hash for Version {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let significant = self
            .segments
            .iter()
            .rposition(|&s| s != 0)
            .map_or(0, |i| i + 1);
        self.segments[..significant].hash(state);
        self.suffix.hash(state);
    }
}

impl FromStr for Version {
    type Err = VersionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Err(VersionError::Empty);
        }
        // single-segment versions are legal when parsed explicitly
        if let Ok(n) = trimmed.parse::<u64>() {
            return Ok(Version {
                segments: alloc::vec![n],
                suffix: None,
            });
        }
        match Version::scan_prefix(trimmed) {
            Some((v, used)) if used == trimmed.len() => Ok(v),
            _ => {
                let digits = trimmed.bytes().take_while(u8::is_ascii_digit).count();
                if digits > 0 && digits < trimmed.len() && valid_suffix(&trimmed[digits..]) {
                    if let Ok(n) = trimmed[..digits].parse::<u64>() {
                        return Ok(Version {
                            segments: alloc::vec![n],
                            suffix: Some(trimmed[digits..].to_string()),
                        });
                    }
                }
                Err(VersionError::Invalid(trimmed.to_string()))
            }
        }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{seg}")?;
        }
        if let Some(s) = &self.suffix {
            f.write_str(s)?;
        }
        Ok(())
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
